"""Standardization: clip, normalize, crop, bicubic and nearest resampling."""

import numpy as np
import pytest

from conftest import hu_image, label_map
from hrpqct.errors import ConfigError, DataError, NumericError
from hrpqct.preprocess import (
    center_crop,
    clip_intensity,
    downsample_bicubic,
    normalize_intensity,
    resize_mask_nearest,
    upsample_mask_nearest,
)
from hrpqct.types import NormImage


def test_clip_bounds_and_identity():
    img = hu_image([[7000, -9000], [1234, 0]])
    out = clip_intensity(img)
    assert out.data.tolist() == [[6000, -4000], [1234, 0]]


def test_clip_idempotent(rng):
    img = hu_image(rng.integers(-30000, 30000, (8, 8)))
    once = clip_intensity(img)
    twice = clip_intensity(once)
    assert np.array_equal(once.data, twice.data)


def test_clip_rejects_bad_bounds():
    img = hu_image([[0, 1]])
    with pytest.raises(ConfigError):
        clip_intensity(img, lo=10, hi=10)


def test_normalize_endpoints_and_midpoint():
    img = hu_image([[-4000, 1000, 6000]])
    out = normalize_intensity(img)
    assert out.data.tolist() == [[0.0, 0.5, 1.0]]


def test_normalize_constant_image_errors():
    with pytest.raises(NumericError, match="degenerate"):
        normalize_intensity(hu_image([[5, 5], [5, 5]]))


def test_normalize_range_exact(rng):
    img = clip_intensity(hu_image(rng.integers(-6000, 8000, (10, 10))))
    out = normalize_intensity(img)
    assert out.data.min() == 0.0 and out.data.max() == 1.0


def test_normalize_fixed_range_mode():
    img = hu_image([[-4000, 1000, 6000]])
    out = normalize_intensity(img, mode="fixed_range")
    assert out.data.tolist() == [[0.0, 0.5, 1.0]]
    img2 = hu_image([[0, 1000]])
    out2 = normalize_intensity(img2, mode="fixed_range")
    assert out2.data[0, 0] == pytest.approx(0.4)


def test_center_crop_offsets():
    data = np.zeros((2304, 2304), dtype=np.int16)
    data[352, 352] = 77
    data[352 + 1599, 352 + 1599] = 88
    img = hu_image(data)
    out = center_crop(img, 1600)
    assert out.data.shape == (1600, 1600)
    assert out.data[0, 0] == 77
    assert out.data[1599, 1599] == 88


def test_center_crop_identity_and_errors():
    img = hu_image(np.arange(1600 * 1600, dtype=np.int64).reshape(1600, 1600) % 100)
    assert np.array_equal(center_crop(img, 1600).data, img.data)
    with pytest.raises(DataError):
        center_crop(hu_image(np.zeros((1599, 1600))), 1600)


def test_center_crop_odd_margin_drops_high_edge():
    img = hu_image(np.arange(5 * 5).reshape(5, 5))
    out = center_crop(img, 2)
    # margin 3 -> offset 1; rows/cols 1..2 kept, extra pixel dropped high
    assert np.array_equal(out.data, img.data[1:3, 1:3])


def test_downsample_constant_preserved():
    img = NormImage(data=np.full((1600, 1600), 0.4), voxel_size_um=60.7)
    out = downsample_bicubic(img, 2)
    assert out.data.shape == (800, 800)
    assert out.data == pytest.approx(np.full((800, 800), 0.4))
    assert out.voxel_size_um == pytest.approx(121.4)


def _catmull_rom_weight(d, a=-0.5):
    d = abs(d)
    if d <= 1:
        return (a + 2) * d**3 - (a + 3) * d**2 + 1
    if d < 2:
        return a * (d**3 - 5 * d**2 + 8 * d - 4)
    return 0.0


def _oracle_downsample(data, factor):
    """Direct per-pixel separable Catmull-Rom evaluation with edge clamp."""
    h, w = data.shape
    oh, ow = h // factor, w // factor

    def sample_axis(vec, out_len, in_len):
        out = np.zeros(out_len)
        for i in range(out_len):
            src = (i + 0.5) * factor - 0.5
            base = int(np.floor(src))
            acc = 0.0
            for tap in range(-1, 3):
                idx = min(max(base + tap, 0), in_len - 1)
                acc += _catmull_rom_weight(src - (base + tap)) * vec[idx]
            out[i] = acc
        return out

    rows = np.stack([sample_axis(data[r], ow, w) for r in range(h)])
    cols = np.stack([sample_axis(rows[:, c], oh, h) for c in range(ow)], axis=1)
    return cols


def test_downsample_matches_direct_kernel_oracle(rng):
    yy, xx = np.mgrid[0:4, 0:4]
    ramp = (0.1 * yy + 0.2 * xx) / 1.0
    ramp = ramp / ramp.max()
    img = NormImage(data=ramp, voxel_size_um=60.7)
    out = downsample_bicubic(img, 2)
    expected = np.clip(_oracle_downsample(ramp, 2), 0.0, 1.0)
    assert out.data == pytest.approx(expected, abs=1e-12)
    noisy = rng.random((8, 8))
    out2 = downsample_bicubic(NormImage(data=noisy, voxel_size_um=60.7), 2)
    assert out2.data == pytest.approx(np.clip(_oracle_downsample(noisy, 2), 0, 1), abs=1e-12)


def test_downsample_requires_divisible_dims():
    with pytest.raises(DataError):
        downsample_bicubic(NormImage(data=np.zeros((5, 4)), voxel_size_um=1.0), 2)


def test_mask_resize_label_closure(rng):
    data = rng.choice([0, 1, 5], size=(64, 64)).astype(np.uint8)
    lm = label_map(data)
    out = resize_mask_nearest(lm, 32, 32)
    assert set(np.unique(out.data)) <= {0, 1, 5}


def test_mask_upsample_block_replication():
    lm = label_map([[1, 2], [2, 1]])
    out = upsample_mask_nearest(lm, 16)
    assert out.data.shape == (16, 16)
    for bi in range(2):
        for bj in range(2):
            block = out.data[bi * 8 : (bi + 1) * 8, bj * 8 : (bj + 1) * 8]
            assert (block == lm.data[bi, bj]).all()


def test_mask_down_then_up_constant_identity():
    lm = label_map(np.full((200, 200), 4))
    down = resize_mask_nearest(lm, 100, 100)
    up = upsample_mask_nearest(down, 200)
    assert np.array_equal(up.data, lm.data)

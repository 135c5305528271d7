"""The ten derived-image kinds feeding feature extraction."""

import math

import numpy as np
import pytest

from conftest import hu_image
from hrpqct.errors import ConfigError
from hrpqct.filters import FILTER_KINDS, apply_filter, log_kernel


def test_exactly_ten_filter_kinds():
    assert len(FILTER_KINDS) == 10
    assert len(set(FILTER_KINDS)) == 10
    assert FILTER_KINDS[0] == "original"
    assert {"wavelet_L", "wavelet_H"} <= set(FILTER_KINDS)


def test_outputs_shape_preserving_and_deterministic(rng):
    img = hu_image(rng.integers(-1000, 2000, (21, 17)))
    for kind in FILTER_KINDS:
        out1 = apply_filter(img, kind)
        out2 = apply_filter(img, kind)
        assert out1.shape == img.data.shape
        assert np.array_equal(out1, out2)


def test_original_is_identity_copy():
    img = hu_image([[1, -2], [3, 4]])
    out = apply_filter(img, "original")
    assert np.array_equal(out, img.data.astype(float))


def test_constant_image_gradient_and_log_are_zero():
    img = hu_image(np.full((16, 16), 700))
    assert np.abs(apply_filter(img, "gradient")).max() == 0.0
    assert np.abs(apply_filter(img, "log_sigma2")).max() < 1e-9


def test_log_kernel_sums_to_zero_and_matches_analytic_center():
    k = log_kernel(2.0)
    assert abs(k.sum()) < 1e-10
    # center entry before mean subtraction is the analytic LoG at the origin
    sigma = 2.0
    analytic_center = (-2.0 * sigma**2) / sigma**4 / (2.0 * math.pi * sigma**2)
    center = k[k.shape[0] // 2, k.shape[1] // 2]
    raw_mean = analytic_center - center  # k = raw - mean(raw)
    radius = (k.shape[0] - 1) // 2
    assert radius == math.ceil(4 * sigma)
    assert center == pytest.approx(analytic_center - raw_mean, abs=1e-15)
    # the analytic center dominates every other entry in magnitude
    assert center < 0 and abs(center) == np.abs(k).max()


def test_lbp_constant_image_codes_eight():
    img = hu_image(np.full((9, 9), 123))
    out = apply_filter(img, "lbp_2d")
    assert (out == 8.0).all()


def test_lbp_values_in_code_range(rng):
    img = hu_image(rng.integers(-500, 500, (15, 15)))
    out = apply_filter(img, "lbp_2d")
    assert out.min() >= 0 and out.max() <= 9
    assert np.array_equal(out, np.rint(out))


def test_haar_subbands_match_block_oracle():
    data = np.zeros((6, 6), dtype=np.int16)
    data[2, 3] = 100  # single bright pixel
    img = hu_image(data)
    ll = apply_filter(img, "wavelet_L")
    hh = apply_filter(img, "wavelet_H")
    x = data.astype(float)
    for bi in range(3):
        for bj in range(3):
            a = x[2 * bi, 2 * bj]
            b = x[2 * bi, 2 * bj + 1]
            c = x[2 * bi + 1, 2 * bj]
            d = x[2 * bi + 1, 2 * bj + 1]
            block_ll = (a + b + c + d) / 2.0
            block_hh = (a - b - c + d) / 2.0
            assert (ll[2 * bi : 2 * bi + 2, 2 * bj : 2 * bj + 2] == block_ll).all()
            assert (hh[2 * bi : 2 * bi + 2, 2 * bj : 2 * bj + 2] == block_hh).all()


def test_pointwise_filter_properties(rng):
    img = hu_image(rng.integers(-2000, 2000, (12, 12)))
    sq = apply_filter(img, "square")
    assert (sq >= 0).all()
    x = img.data.astype(float)
    logf = apply_filter(img, "logarithm")
    flipped = hu_image(-img.data)
    assert np.allclose(apply_filter(flipped, "logarithm"), -logf)  # odd map
    expf = apply_filter(img, "exponential")
    assert (expf > 0).all()
    m = np.abs(x).max()
    assert sq.max() <= m + 1e-9
    assert np.abs(apply_filter(img, "squareroot")).max() <= m + 1e-9


def test_unknown_kind_raises():
    with pytest.raises(ConfigError):
        apply_filter(hu_image([[1, 2]]), "sobel")

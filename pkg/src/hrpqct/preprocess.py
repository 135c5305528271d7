"""Intensity standardization: crop, clip, normalize, resample.

Bicubic resampling uses the Catmull-Rom kernel (a = -0.5) with clamped
edges; masks are resampled with nearest neighbor so no new label ids can
appear. All functions are pure.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .types import HUImage, LabelMap, NormImage

CLIP_LO_HU = -4000
CLIP_HI_HU = 6000
CROP_SIDE = 1600


def clip_intensity(img: HUImage, lo: int = CLIP_LO_HU, hi: int = CLIP_HI_HU) -> HUImage:
    """Clamp every pixel to [lo, hi] HU. Idempotent."""
    if lo >= hi:
        raise ConfigError(f"clip bounds require lo < hi, got [{lo}, {hi}]")
    if lo < np.iinfo(np.int16).min or hi > np.iinfo(np.int16).max:
        raise ConfigError("clip bounds must stay representable in signed 16-bit")
    data = np.clip(img.data, lo, hi).astype(np.int16)
    return HUImage(data=data, voxel_size_um=img.voxel_size_um)


def normalize_intensity(
    img: HUImage,
    mode: str = "per_image",
    lo: int = CLIP_LO_HU,
    hi: int = CLIP_HI_HU,
) -> NormImage:
    """Map clipped intensities linearly to [0, 1].

    mode "per_image" uses the min/max of this image's clipped data;
    mode "fixed_range" divides by the clip bounds instead.
    """
    data = img.data.astype(np.float64)
    if mode == "per_image":
        vmin, vmax = data.min(), data.max()
        if vmax <= vmin:
            raise NumericError("degenerate intensity range: constant image")
    elif mode == "fixed_range":
        vmin, vmax = float(lo), float(hi)
    else:
        raise ConfigError(f"unknown normalization mode: {mode!r}")
    out = (data - vmin) / (vmax - vmin)
    return NormImage(data=np.clip(out, 0.0, 1.0), voxel_size_um=img.voxel_size_um)


def center_crop(image, side: int = CROP_SIDE):
    """Centered side x side window; odd margins drop the extra high-index pixel."""
    h, w = image.data.shape
    if h < side or w < side:
        raise DataError(f"input {w}x{h} smaller than crop side {side}")
    off_r = (h - side) // 2
    off_c = (w - side) // 2
    data = image.data[off_r : off_r + side, off_c : off_c + side]
    return replace(image, data=data.copy())


def _catmull_rom_weights(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Weights for taps at offsets -1..2 given fractional positions t in [0,1)."""
    d = np.stack([1.0 + t, t, 1.0 - t, 2.0 - t])  # distances of the 4 taps
    ad = np.abs(d)
    near = (a + 2.0) * ad**3 - (a + 3.0) * ad**2 + 1.0
    far = a * (ad**3 - 5.0 * ad**2 + 8.0 * ad - 4.0)
    return np.where(ad <= 1.0, near, far)


def _resample_axis_catmull_rom(arr: np.ndarray, out_len: int, axis: int) -> np.ndarray:
    in_len = arr.shape[axis]
    scale = in_len / out_len
    src = (np.arange(out_len) + 0.5) * scale - 0.5
    base = np.floor(src).astype(int)
    w = _catmull_rom_weights(src - base)  # (4, out_len)
    arr = np.moveaxis(arr, axis, 0)
    out = np.zeros((out_len,) + arr.shape[1:], dtype=np.float64)
    for tap in range(4):
        idx = np.clip(base - 1 + tap, 0, in_len - 1)  # edge clamp
        out += w[tap].reshape((-1,) + (1,) * (arr.ndim - 1)) * arr[idx]
    return np.moveaxis(out, 0, axis)


def downsample_bicubic(img: NormImage, factor: int = 2) -> NormImage:
    """Catmull-Rom downsampling by an integer factor; output re-clamped to [0,1]."""
    h, w = img.data.shape
    if factor < 1 or h % factor or w % factor:
        raise DataError(f"factor {factor} must divide dimensions {w}x{h}")
    out = _resample_axis_catmull_rom(img.data, h // factor, axis=0)
    out = _resample_axis_catmull_rom(out, w // factor, axis=1)
    return NormImage(
        data=np.clip(out, 0.0, 1.0),
        voxel_size_um=img.voxel_size_um * factor,
    )


def _nearest_indices(out_len: int, in_len: int) -> np.ndarray:
    src = np.floor((np.arange(out_len) + 0.5) * (in_len / out_len)).astype(int)
    return np.clip(src, 0, in_len - 1)


def resize_mask_nearest(label_map: LabelMap, target_w: int, target_h: int) -> LabelMap:
    """Nearest-neighbor mask resize; never introduces new label ids."""
    if target_w <= 0 or target_h <= 0:
        raise DataError("target dimensions must be positive")
    rows = _nearest_indices(target_h, label_map.height)
    cols = _nearest_indices(target_w, label_map.width)
    data = label_map.data[np.ix_(rows, cols)]
    voxel = label_map.voxel_size_um * label_map.width / target_w
    return LabelMap(data=data.copy(), voxel_size_um=voxel)


def upsample_mask_nearest(label_map: LabelMap, target: int = CROP_SIDE) -> LabelMap:
    return resize_mask_nearest(label_map, target, target)

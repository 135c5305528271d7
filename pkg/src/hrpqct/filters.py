"""Derived-image filter bank feeding the radiomics engine.

Ten image kinds: the original plus nine filtered variants (the wavelet
contributes an L and an H subband, so eight filter types yield nine
derived images). Filter names are the canonical strings used in feature
column names.

Pointwise-filter scaling constants (m = max absolute input intensity):
  square      (c*x)^2 with c = 1/sqrt(m), so outputs span [0, m]
  squareroot  sign(x)*sqrt(m*|x|), spanning [-m, m]
  logarithm   sign(x)*log(1+|x|) * m/log(1+m)
  exponential exp(c*x) with c = log(m)/m for m > 1 else c = 1
These are repo conventions chosen so filtered intensities stay on the
scale of the input.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DataError
from .types import HUImage

FILTER_KINDS = (
    "original",
    "log_sigma2",
    "wavelet_L",
    "wavelet_H",
    "square",
    "squareroot",
    "logarithm",
    "exponential",
    "gradient",
    "lbp_2d",
)

LOG_SIGMA_PX = 2.0


def log_kernel(sigma: float = LOG_SIGMA_PX) -> np.ndarray:
    """Laplacian-of-Gaussian kernel truncated at 4*sigma, entries summing to 0."""
    radius = int(math.ceil(4.0 * sigma))
    r = np.arange(-radius, radius + 1, dtype=np.float64)
    yy, xx = np.meshgrid(r, r, indexing="ij")
    r2 = yy * yy + xx * xx
    k = (r2 - 2.0 * sigma**2) / sigma**4 * np.exp(-r2 / (2.0 * sigma**2))
    k /= 2.0 * math.pi * sigma**2
    return k - k.mean()


def _haar_subbands(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Single-level Haar LL and HH subbands, upsampled back to input dims
    by nearest neighbor so masks stay aligned."""
    h, w = data.shape
    padded = np.pad(data, ((0, h % 2), (0, w % 2)), mode="edge")
    a = padded[0::2, 0::2]
    b = padded[0::2, 1::2]
    c = padded[1::2, 0::2]
    d = padded[1::2, 1::2]
    ll = (a + b + c + d) / 2.0
    hh = (a - b - c + d) / 2.0
    ll_up = np.repeat(np.repeat(ll, 2, axis=0), 2, axis=1)[:h, :w]
    hh_up = np.repeat(np.repeat(hh, 2, axis=0), 2, axis=1)[:h, :w]
    return ll_up, hh_up


def _lbp_uniform(data: np.ndarray) -> np.ndarray:
    """Rotation-invariant uniform LBP, 8 neighbors at radius 1 (codes 0-9).

    Diagonal sample points are bilinearly interpolated; comparisons use
    sample >= center, so a constant image codes to 8 everywhere.
    """
    h, w = data.shape
    padded = np.pad(data, 2, mode="edge")
    samples = []
    for k in range(8):
        theta = 2.0 * math.pi * k / 8.0
        dy, dx = -math.sin(theta), math.cos(theta)
        y0, x0 = math.floor(dy), math.floor(dx)
        fy, fx = dy - y0, dx - x0
        w00 = (1 - fy) * (1 - fx)
        w01 = (1 - fy) * fx
        w10 = fy * (1 - fx)
        w11 = fy * fx
        base_r, base_c = 2 + y0, 2 + x0
        plane = (
            w00 * padded[base_r : base_r + h, base_c : base_c + w]
            + w01 * padded[base_r : base_r + h, base_c + 1 : base_c + 1 + w]
            + w10 * padded[base_r + 1 : base_r + 1 + h, base_c : base_c + w]
            + w11 * padded[base_r + 1 : base_r + 1 + h, base_c + 1 : base_c + 1 + w]
        )
        samples.append(plane >= data)
    bits = np.stack(samples)  # (8, h, w)
    ones = bits.sum(axis=0)
    transitions = np.zeros((h, w), dtype=np.int64)
    for k in range(8):
        transitions += bits[k] != bits[(k + 1) % 8]
    return np.where(transitions <= 2, ones, 9).astype(np.float64)


def apply_filter(img: HUImage, kind: str) -> np.ndarray:
    """Return the derived image for one filter kind as float64, same dims."""
    if img.data.size == 0:
        raise DataError("empty image")
    data = img.data.astype(np.float64)
    if kind == "original":
        return data.copy()
    if kind == "log_sigma2":
        return ndimage.convolve(data, log_kernel(), mode="reflect")
    if kind in ("wavelet_L", "wavelet_H"):
        ll, hh = _haar_subbands(data)
        return ll if kind == "wavelet_L" else hh
    m = float(np.abs(data).max())
    if kind == "square":
        if m == 0.0:
            return np.zeros_like(data)
        return data * data / m
    if kind == "squareroot":
        return np.sign(data) * np.sqrt(m * np.abs(data))
    if kind == "logarithm":
        if m == 0.0:
            return np.zeros_like(data)
        return np.sign(data) * np.log1p(np.abs(data)) * (m / math.log1p(m))
    if kind == "exponential":
        c = math.log(m) / m if m > 1.0 else 1.0
        return np.exp(c * data)
    if kind == "gradient":
        gy, gx = np.gradient(data)
        return np.hypot(gy, gx)
    if kind == "lbp_2d":
        return _lbp_uniform(data)
    raise ConfigError(f"unknown filter kind: {kind!r}")

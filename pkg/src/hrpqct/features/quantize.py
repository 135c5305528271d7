"""Gray-level discretization of a masked ROI for the texture matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, EmptyRegionError

DEFAULT_BIN_COUNT = 32


@dataclass(frozen=True)
class QuantizedROI:
    """Integer gray levels 1..n_levels on masked pixels (0 elsewhere).

    Arrays are cropped to the mask's bounding box; every texture matrix is
    translation invariant, so this only affects speed.
    """

    levels: np.ndarray  # int64, 0 outside the mask
    mask: np.ndarray  # bool
    n_levels: int
    bin_edges: np.ndarray

    @property
    def masked_levels(self) -> np.ndarray:
        return self.levels[self.mask]


def _bounding_box(mask: np.ndarray) -> tuple[slice, slice]:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return slice(rows[0], rows[-1] + 1), slice(cols[0], cols[-1] + 1)


def discretize(
    values: np.ndarray,
    mask: np.ndarray,
    bins: int = DEFAULT_BIN_COUNT,
    policy: str = "count",
    bin_width: float | None = None,
) -> QuantizedROI:
    """Fixed-bin-count (default) or fixed-bin-width quantization.

    Count policy: `bins` equal-width bins between ROI min and max, top bin
    right-closed. Width policy: bins of `bin_width` anchored at the ROI
    minimum. A constant ROI quantizes to the single level 1.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyRegionError("cannot discretize an empty ROI")
    box = _bounding_box(mask)
    mask = mask[box]
    values = np.asarray(values, dtype=np.float64)[box]
    vals = values[mask]
    vmin, vmax = float(vals.min()), float(vals.max())
    levels = np.zeros(mask.shape, dtype=np.int64)
    if vmax <= vmin:
        levels[mask] = 1
        return QuantizedROI(
            levels=levels, mask=mask, n_levels=1, bin_edges=np.array([vmin, vmax])
        )
    if policy == "count":
        if bins < 1:
            raise ConfigError("bin count must be >= 1")
        width = (vmax - vmin) / bins
        lv = np.minimum(np.floor((vals - vmin) / width).astype(np.int64) + 1, bins)
        edges = np.linspace(vmin, vmax, bins + 1)
        n_levels = bins
    elif policy == "width":
        if bin_width is None or bin_width <= 0:
            raise ConfigError("width policy requires a positive bin_width")
        lv = np.floor((vals - vmin) / bin_width).astype(np.int64) + 1
        n_levels = int(lv.max())
        edges = vmin + bin_width * np.arange(n_levels + 1)
    else:
        raise ConfigError(f"unknown discretization policy: {policy!r}")
    levels[mask] = lv
    return QuantizedROI(levels=levels, mask=mask, n_levels=n_levels, bin_edges=edges)


def histogram_probabilities(q: QuantizedROI) -> np.ndarray:
    """Occupancy probabilities of levels 1..n_levels."""
    counts = np.bincount(q.masked_levels, minlength=q.n_levels + 1)[1:]
    return counts / counts.sum()

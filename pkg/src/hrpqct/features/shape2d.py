"""2D shape features derived solely from the mask, in pixel units.

Area and perimeter come from the marching-squares contour of the mask at
iso-level 0.5: contour vertices land on cell-edge midpoints, so each 2x2
cell contributes a fixed area fraction and segment length per corner
configuration. Saddle cells use the split convention (two separate corner
cuts). Axis lengths come from the second moments of the pixel centers.
"""

from __future__ import annotations

import math

import numpy as np

from .._geometry import convex_hull
from ..errors import DataError

SHAPE2D_NAMES = (
    "MeshSurface",
    "Perimeter",
    "PerimeterSurfaceRatio",
    "Sphericity",
    "SphericalDisproportion",
    "MaximumDiameter",
    "MajorAxisLength",
    "MinorAxisLength",
    "Elongation",
)

_SQ2H = math.sqrt(2.0) / 2.0

# Indexed by case = tl + 2*tr + 4*br + 8*bl.
_CELL_AREA = np.array(
    [0, 1, 1, 4, 1, 2, 4, 7, 1, 4, 2, 7, 4, 7, 7, 8], dtype=np.float64
) / 8.0
_CELL_PERIMETER = np.array(
    [
        0.0, _SQ2H, _SQ2H, 1.0,
        _SQ2H, 2 * _SQ2H, 1.0, _SQ2H,
        _SQ2H, 1.0, 2 * _SQ2H, _SQ2H,
        1.0, _SQ2H, _SQ2H, 0.0,
    ]
)


def marching_squares_area_perimeter(mask: np.ndarray) -> tuple[float, float]:
    p = np.pad(np.asarray(mask, dtype=np.int64), 1)
    tl = p[:-1, :-1]
    tr = p[:-1, 1:]
    br = p[1:, 1:]
    bl = p[1:, :-1]
    case = tl + 2 * tr + 4 * br + 8 * bl
    counts = np.bincount(case.ravel(), minlength=16)
    return float(counts @ _CELL_AREA), float(counts @ _CELL_PERIMETER)


def shape2d_features(mask: np.ndarray) -> dict[str, float]:
    mask = np.asarray(mask, dtype=bool)
    if mask.sum() < 3:
        raise DataError("shape features require a mask with at least 3 pixels")
    # shape is translation invariant; cropping to the bounding box only saves work
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    mask = mask[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    area, perimeter = marching_squares_area_perimeter(mask)
    sphericity = 2.0 * math.sqrt(math.pi * area) / perimeter
    coords = np.argwhere(mask).astype(np.float64)
    cov = np.cov(coords, rowvar=False, bias=True)
    eigvals = np.sort(np.linalg.eigvalsh(cov))[::-1]
    eigvals = np.clip(eigvals, 0.0, None)
    major = 4.0 * math.sqrt(eigvals[0])
    minor = 4.0 * math.sqrt(eigvals[1])
    elongation = math.sqrt(eigvals[1] / eigvals[0]) if eigvals[0] > 0 else 0.0
    hull = convex_hull(coords)
    diffs = hull[:, None, :] - hull[None, :, :]
    max_diameter = float(np.sqrt((diffs**2).sum(axis=2)).max())
    return {
        "MeshSurface": area,
        "Perimeter": perimeter,
        "PerimeterSurfaceRatio": perimeter / area,
        "Sphericity": sphericity,
        "SphericalDisproportion": 1.0 / sphericity,
        "MaximumDiameter": max_diameter,
        "MajorAxisLength": major,
        "MinorAxisLength": minor,
        "Elongation": elongation,
    }

"""Discretization, first-order statistics, and 2D shape features."""

import math

import numpy as np
import pytest

from hrpqct.errors import DataError, EmptyRegionError
from hrpqct.features import (
    FIRSTORDER_NAMES,
    SHAPE2D_NAMES,
    discretize,
    first_order_features,
    histogram_probabilities,
    marching_squares_area_perimeter,
    shape2d_features,
)


def full_mask(arr):
    return np.ones_like(np.asarray(arr, dtype=float), dtype=bool)


def test_discretize_edge_binning():
    vals = np.array([[0.0, 31.9, 32.0]])
    q = discretize(vals, full_mask(vals), bins=32)
    assert q.masked_levels.tolist() == [1, 32, 32]
    assert q.n_levels == 32


def test_discretize_constant_roi_single_level():
    vals = np.full((3, 3), 7.0)
    q = discretize(vals, full_mask(vals))
    assert q.n_levels == 1
    assert (q.masked_levels == 1).all()


def test_discretize_counting_oracle(rng):
    vals = rng.random((20, 20)) * 100
    mask = rng.random((20, 20)) < 0.6
    mask[0, 0] = True
    q = discretize(vals, mask, bins=32)
    levels = q.masked_levels
    assert levels.min() >= 1 and levels.max() <= 32
    assert levels.size == mask.sum()
    probs = histogram_probabilities(q)
    assert probs.sum() == pytest.approx(1.0)


def test_discretize_width_policy():
    vals = np.array([[0.0, 2.5, 9.9]])
    q = discretize(vals, full_mask(vals), policy="width", bin_width=2.0)
    assert q.masked_levels.tolist() == [1, 2, 5]


def test_discretize_empty_roi():
    with pytest.raises(EmptyRegionError):
        discretize(np.zeros((2, 2)), np.zeros((2, 2), dtype=bool))


def _fo(vals, mask=None, voxel_area=1.0):
    vals = np.asarray(vals, dtype=float)
    mask = full_mask(vals) if mask is None else mask
    q = discretize(vals, mask)
    return first_order_features(vals, mask, q, voxel_area_mm2=voxel_area)


def test_firstorder_names_fixed():
    feats = _fo([[1.0, 2.0]])
    assert tuple(feats.keys()) == FIRSTORDER_NAMES
    assert len(FIRSTORDER_NAMES) == 18


def test_firstorder_constant_roi_ledger_values():
    feats = _fo(np.full((4, 4), 5.0))
    assert feats["Mean"] == feats["Median"] == feats["Minimum"] == feats["Maximum"] == 5.0
    assert feats["Variance"] == 0.0
    assert feats["Entropy"] == 0.0
    assert feats["Uniformity"] == 1.0
    assert feats["Skewness"] == 0.0 and feats["Kurtosis"] == 0.0
    assert feats["Range"] == 0.0


def test_firstorder_hand_arithmetic():
    feats = _fo([[1.0, 2.0, 3.0, 4.0]])
    assert feats["Mean"] == 2.5
    assert feats["Variance"] == pytest.approx(1.25)  # population
    assert feats["Range"] == 3.0
    assert feats["Energy"] == pytest.approx(1 + 4 + 9 + 16)
    assert feats["RootMeanSquared"] == pytest.approx(math.sqrt(30 / 4))


def test_percentile_linear_interpolation():
    feats = _fo([list(range(1, 11))])
    assert feats["90thPercentile"] == pytest.approx(9.1)
    assert feats["10thPercentile"] == pytest.approx(1.9)


def test_total_energy_scales_with_voxel_area():
    feats = _fo([[2.0, 3.0]], voxel_area=0.25)
    assert feats["TotalEnergy"] == pytest.approx(0.25 * 13.0)


def test_skewness_kurtosis_against_moments(rng):
    vals = rng.normal(size=(9, 9))
    feats = _fo(vals)
    x = vals.ravel()
    m = x.mean()
    v = ((x - m) ** 2).mean()
    assert feats["Skewness"] == pytest.approx(((x - m) ** 3).mean() / v**1.5)
    assert feats["Kurtosis"] == pytest.approx(((x - m) ** 4).mean() / v**2)


def disk(radius):
    side = 2 * radius + 5
    yy, xx = np.mgrid[0:side, 0:side]
    c = side / 2
    return (yy - c) ** 2 + (xx - c) ** 2 <= radius**2


def test_shape_names_fixed():
    feats = shape2d_features(disk(10))
    assert tuple(feats.keys()) == SHAPE2D_NAMES
    assert len(SHAPE2D_NAMES) == 9


def test_single_pixel_mesh_is_half_unit_diamond():
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True
    area, perimeter = marching_squares_area_perimeter(mask)
    assert area == pytest.approx(0.5)
    assert perimeter == pytest.approx(2 * math.sqrt(2))


def test_disk_sphericity_near_one():
    feats = shape2d_features(disk(50))
    assert 0.98 <= feats["Sphericity"] <= 1.0
    assert feats["SphericalDisproportion"] == pytest.approx(1 / feats["Sphericity"])
    assert feats["MeshSurface"] == pytest.approx(math.pi * 50**2, rel=0.02)
    assert feats["MaximumDiameter"] == pytest.approx(100.0, rel=0.02)


def test_bar_elongation_small():
    mask = np.zeros((5, 30), dtype=bool)
    mask[2, 4:26] = True
    feats = shape2d_features(mask)
    assert feats["Elongation"] == 0.0  # 1-pixel-wide bar has zero minor axis
    assert feats["MajorAxisLength"] > 10 * feats["MinorAxisLength"] or (
        feats["MinorAxisLength"] == 0.0
    )
    assert feats["MaximumDiameter"] == pytest.approx(21.0)


def test_sphericity_scale_invariance():
    s25 = shape2d_features(disk(25))["Sphericity"]
    s50 = shape2d_features(disk(50))["Sphericity"]
    assert abs(s50 - s25) / s25 < 0.01


def test_shape_requires_three_pixels():
    mask = np.zeros((3, 3), dtype=bool)
    mask[0, 0] = mask[1, 1] = True
    with pytest.raises(DataError):
        shape2d_features(mask)

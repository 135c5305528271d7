"""Morphological cleanup: components, fragments, continuity, closing, fill."""

import numpy as np
import pytest
from scipy import ndimage
from scipy.spatial import ConvexHull

from conftest import annulus, label_map
from hrpqct.errors import DataError, NumericError
from hrpqct.postprocess import (
    SENTINEL,
    check_cortical_continuity,
    close_cortical_gaps,
    enforce_single_component,
    fill_trabecular_interior,
    postprocess_pipeline,
    relabel_fragments_by_neighbor_majority,
)
from hrpqct.phantom import PhantomParams, generate_phantom
from hrpqct.soft_tissue import collapse_soft_tissue
from hrpqct.types import BG, FC, FT, ST, TC, TT, LabelMap


def test_enforce_single_component_keeps_largest():
    data = np.zeros((20, 20), dtype=np.uint8)
    data[2:7, 2:12] = 1  # 50 px blob
    data[12:13, 12:19] = 1  # 7 px blob
    work, removed, absent = enforce_single_component(label_map(data), 1)
    assert not absent and removed == 7
    assert (work == 1).sum() == 50
    assert (work == SENTINEL).sum() == 7


def test_enforce_single_component_identity_and_absent():
    data = np.zeros((10, 10), dtype=np.uint8)
    data[3:6, 3:6] = 2
    work, removed, absent = enforce_single_component(label_map(data), 2)
    assert removed == 0 and not absent
    assert np.array_equal(work, data)
    _, removed, absent = enforce_single_component(label_map(data), 4)
    assert absent and removed == 0


def test_enforce_single_component_tie_break():
    data = np.zeros((10, 10), dtype=np.uint8)
    data[1, 1:4] = 3  # first in row-major order
    data[5, 5:8] = 3
    work, removed, _ = enforce_single_component(label_map(data), 3)
    assert removed == 3
    assert (work[1, 1:4] == 3).all()
    assert (work[5, 5:8] == SENTINEL).all()


def test_relabel_fragment_inside_soft_tissue():
    data = np.full((7, 7), ST, dtype=np.uint8)
    data[3, 3] = SENTINEL
    out = relabel_fragments_by_neighbor_majority(data)
    assert out[3, 3] == ST


def test_relabel_majority_and_tie_break():
    # fragment at (1,1): neighbors 3 ST / 5 TT -> TT
    data = np.zeros((3, 3), dtype=np.uint8)
    data[:] = TT
    data[0, :] = ST
    data[0, 2] = TT
    data[1, 1] = SENTINEL
    out = relabel_fragments_by_neighbor_majority(data)
    assert out[1, 1] == TT
    # 4 ST vs 4 TT -> smaller id (TT = 2)
    data = np.array(
        [
            [ST, ST, ST],
            [ST, SENTINEL, TT],
            [TT, TT, TT],
        ],
        dtype=np.uint8,
    )
    out = relabel_fragments_by_neighbor_majority(data)
    assert out[1, 1] == TT


def test_relabel_isolated_fragment_goes_background():
    data = np.full((5, 5), SENTINEL, dtype=np.uint8)
    out = relabel_fragments_by_neighbor_majority(data)
    assert (out == BG).all()


def _ring_map(side=120, gap=None, r_outer=45, r_inner=35):
    data = np.zeros((side, side), dtype=np.uint8)
    ring = annulus(side, (side / 2, side / 2), r_outer, r_inner, gap_deg=gap)
    data[ring] = TC
    return data


def test_continuity_full_ring_close_to_one():
    result = check_cortical_continuity(label_map(_ring_map()), "tibia")
    assert result.continuous
    assert result.ratio == pytest.approx(1.0, abs=0.02)


def test_continuity_open_ring_below_threshold_with_pixel_count_oracle():
    data = _ring_map(gap=(0.0, 90.0), r_inner=10)
    result = check_cortical_continuity(label_map(data), "tibia")
    assert not result.continuous
    assert result.ratio < 0.9
    # independent oracle: filled area by complement flood fill from the
    # border, hull area via scipy's ConvexHull vertices + shoelace count
    mask = data == TC
    filled = ndimage.binary_fill_holes(mask)
    pts = np.argwhere(mask)
    hull = ConvexHull(pts)
    poly = pts[hull.vertices].astype(float)
    yy, xx = np.mgrid[0 : data.shape[0], 0 : data.shape[1]]
    all_ge = np.ones(data.shape, dtype=bool)
    all_le = np.ones(data.shape, dtype=bool)
    for i in range(len(poly)):
        a, b = poly[i], poly[(i + 1) % len(poly)]
        cross = (b[0] - a[0]) * (xx - a[1]) - (b[1] - a[1]) * (yy - a[0])
        all_ge &= cross >= -1e-9
        all_le &= cross <= 1e-9
    inside = all_ge | all_le  # orientation-agnostic point-in-polygon
    oracle_ratio = filled.sum() / inside.sum()
    assert result.ratio == pytest.approx(oracle_ratio, rel=1e-3)


def test_continuity_needs_three_pixels():
    data = np.zeros((10, 10), dtype=np.uint8)
    data[2, 2] = TC
    data[3, 3] = TC
    with pytest.raises(DataError, match="hull"):
        check_cortical_continuity(label_map(data), "tibia")


def test_close_cortical_gaps_small_gap_radius_two():
    data = _ring_map(gap=(0.0, 3.0))  # ~3 px wide gap at r=45
    assert not check_cortical_continuity(label_map(data), "tibia").continuous
    work, radius = close_cortical_gaps(label_map(data), "tibia")
    assert radius == 2
    assert check_cortical_continuity(work, "tibia").continuous


def test_close_cortical_gaps_huge_gap_errors():
    data = _ring_map(side=220, gap=(0.0, 100.0), r_outer=50, r_inner=44)
    with pytest.raises(NumericError, match="discontinuous"):
        close_cortical_gaps(label_map(data), "tibia", slice_id="s1")


def test_fill_trabecular_interior():
    data = _ring_map()
    side = data.shape[0]
    yy, xx = np.mgrid[0:side, 0:side]
    inside = (yy - side / 2) ** 2 + (xx - side / 2) ** 2 <= 35**2
    data[inside] = ST  # interior holes labeled soft tissue
    data[0, 0] = ST  # outside pixel keeps its label
    out = fill_trabecular_interior(label_map(data), "tibia")
    assert (out[inside & (data != TC)] == TT).all()
    assert out[0, 0] == ST


def test_fill_identity_when_interior_already_trabecular():
    data = _ring_map()
    side = data.shape[0]
    yy, xx = np.mgrid[0:side, 0:side]
    inside = ((yy - side / 2) ** 2 + (xx - side / 2) ** 2 <= 35**2) & (data != TC)
    data[inside] = TT
    out = fill_trabecular_interior(label_map(data), "tibia")
    assert np.array_equal(out, data)


def _clean_phantom_map(seed=3):
    _, truth = generate_phantom(PhantomParams(seed=seed))
    return collapse_soft_tissue(truth)


def test_pipeline_identity_on_clean_map():
    clean = _clean_phantom_map()
    out, report = postprocess_pipeline(clean)
    assert np.array_equal(out.data, clean.data)
    assert all(v == 0 for v in report.components_removed.values())


def _salt_noise(data, rng, n=60):
    noisy = data.copy()
    h, w = data.shape
    for _ in range(n):
        r = int(rng.integers(0, h))
        c = int(rng.integers(0, w))
        noisy[r, c] = int(rng.integers(1, 6))
    return noisy


def test_pipeline_postconditions_after_salt_noise(rng):
    clean = _clean_phantom_map()
    for trial in range(5):
        noisy = LabelMap(
            data=_salt_noise(clean.data, rng), voxel_size_um=clean.voxel_size_um
        )
        out, _ = postprocess_pipeline(noisy)
        structure = np.ones((3, 3))
        for class_id in (TC, TT, FC, FT):
            mask = out.data == class_id
            assert mask.any()
            _, n = ndimage.label(mask, structure=structure)
            assert n == 1
        for bone in ("tibia", "fibula"):
            cortical = {"tibia": TC, "fibula": FC}[bone]
            ring = out.data == cortical
            filled = ndimage.binary_fill_holes(ring)
            interior = filled & ~ring
            assert not np.isin(out.data[interior], (BG, ST)).any()
        assert out.data.size == clean.data.size


def test_pipeline_idempotent(rng):
    clean = _clean_phantom_map()
    for trial in range(5):
        noisy = LabelMap(
            data=_salt_noise(clean.data, rng), voxel_size_um=clean.voxel_size_um
        )
        once, _ = postprocess_pipeline(noisy)
        twice, _ = postprocess_pipeline(once)
        assert np.array_equal(once.data, twice.data)

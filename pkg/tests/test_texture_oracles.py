"""Texture matrices against brute-force enumeration oracles."""

import numpy as np
import pytest

import oracles
from hrpqct.features import (
    DIRECTIONS_2D,
    GLCM_NAMES,
    discretize,
    glcm_features,
    glcm_matrix,
    gldm_features,
    glrlm_features,
    glrlm_matrix,
    glszm_features,
    glszm_matrix,
    ngtdm_features,
)
from hrpqct.features.quantize import QuantizedROI
from hrpqct.features.texture import _rlm_style_features, GLRLM_NAMES


def roi_from_levels(levels, ng) -> QuantizedROI:
    levels = np.asarray(levels, dtype=np.int64)
    return QuantizedROI(
        levels=levels, mask=levels > 0, n_levels=ng, bin_edges=np.arange(ng + 1.0)
    )


def assert_feature_dicts_close(actual, expected, tol=1e-10):
    assert set(actual) == set(expected)
    for name in expected:
        assert actual[name] == pytest.approx(expected[name], abs=tol, rel=tol), name


def test_glcm_constant_roi_degenerate_values():
    q = roi_from_levels(np.ones((4, 4)), 1)
    feats = glcm_features(q)
    assert feats["Contrast"] == 0.0
    assert feats["JointEnergy"] == 1.0
    assert feats["JointEntropy"] == 0.0
    assert feats["MaximumProbability"] == 1.0
    assert feats["Autocorrelation"] == 1.0


def test_glcm_hand_enumerated_2x2():
    # [[1,1],[1,2]], horizontal offset, symmetric accumulation
    q = roi_from_levels([[1, 1], [1, 2]], 2)
    p = glcm_matrix(q, (0, 1))
    assert p == pytest.approx(np.array([[0.5, 0.25], [0.25, 0.0]]))
    feats = glcm_features(q, offsets=((0, 1),))
    assert feats["Contrast"] == pytest.approx(0.5)


def test_glcm_symmetry_and_mcc_rows():
    rng = np.random.Generator(np.random.Philox(key=7))
    levels, _ = oracles.random_quantized_roi(rng, max_side=10, ng=5)
    q = roi_from_levels(levels, 5)
    for off in DIRECTIONS_2D:
        p = glcm_matrix(q, off)
        if p is None:
            continue
        assert np.allclose(p, p.T)
        assert p.sum() == pytest.approx(1.0)
        # the MCC transition matrix is row-stochastic
        px = p.sum(axis=1)
        present = px > 0
        sub = p[np.ix_(present, present)]
        pxs = px[present]
        qmat = (sub / pxs[:, None]) @ (sub / pxs[None, :]).T
        assert qmat.sum(axis=1) == pytest.approx(np.ones(int(present.sum())))


def test_glrlm_single_run_closed_form():
    n = 7
    q = roi_from_levels(np.ones((1, n)), 1)
    counts = glrlm_matrix(q, (0, 1))
    assert counts[0, n - 1] == 1 and counts.sum() == 1
    feats = glrlm_features(q, directions=((0, 1),))
    assert feats["LongRunEmphasis"] == pytest.approx(n**2)
    assert feats["RunLengthNonUniformity"] == pytest.approx(1.0)


def test_ngtdm_constant_roi_caps():
    q = roi_from_levels(np.ones((5, 5)), 1)
    feats = ngtdm_features(q)
    assert feats["Coarseness"] == 1e6
    assert feats["Contrast"] == 0.0
    assert feats["Busyness"] == 0.0


def test_translation_invariance():
    rng = np.random.Generator(np.random.Philox(key=11))
    levels, mask = oracles.random_quantized_roi(rng, max_side=8, ng=4)
    big = np.zeros((30, 30), dtype=np.int64)
    big[3 : 3 + levels.shape[0], 4 : 4 + levels.shape[1]] = levels
    shifted = np.zeros((30, 30), dtype=np.int64)
    shifted[11 : 11 + levels.shape[0], 15 : 15 + levels.shape[1]] = levels
    qa = roi_from_levels(big, 4)
    qb = roi_from_levels(shifted, 4)
    assert_feature_dicts_close(glcm_features(qa), glcm_features(qb), tol=1e-12)
    assert_feature_dicts_close(glszm_features(qa), glszm_features(qb), tol=1e-12)
    assert_feature_dicts_close(gldm_features(qa), gldm_features(qb), tol=1e-12)


@pytest.mark.parametrize("seed", range(12))
def test_all_matrices_match_bruteforce(seed):
    rng = np.random.Generator(np.random.Philox(key=seed))
    levels, mask = oracles.random_quantized_roi(rng)
    ng = 6
    q = roi_from_levels(levels, ng)
    assert_feature_dicts_close(
        glcm_features(q), oracles.glcm_features_averaged(levels, ng)
    )
    assert_feature_dicts_close(
        glrlm_features(q), oracles.glrlm_features_averaged(levels, ng)
    )
    assert_feature_dicts_close(glszm_features(q), oracles.glszm_features(levels, ng))
    assert_feature_dicts_close(ngtdm_features(q), oracles.ngtdm_features(levels, ng))
    assert_feature_dicts_close(gldm_features(q), oracles.gldm_features(levels, ng))


def test_matrix_level_bruteforce_equality():
    rng = np.random.Generator(np.random.Philox(key=99))
    levels, _ = oracles.random_quantized_roi(rng, max_side=9, ng=4)
    q = roi_from_levels(levels, 4)
    for off in DIRECTIONS_2D:
        ours = glcm_matrix(q, off)
        ref = oracles.glcm_matrix(levels, 4, off)
        if ours is None:
            assert ref is None
        else:
            assert np.allclose(ours, ref, atol=1e-12)
        run_ours = glrlm_matrix(q, off)
        run_ref = oracles.glrlm_matrix(levels, 4, off)
        assert np.allclose(run_ours[:, : run_ref.shape[1]], run_ref)
        assert run_ours[:, run_ref.shape[1] :].sum() == 0
    zone_ours = glszm_matrix(q)
    zone_ref = oracles.glszm_matrix(levels, 4)
    assert np.allclose(zone_ours[:, : zone_ref.shape[1]], zone_ref)


def test_rlm_feature_shapes_on_known_matrix():
    # two runs: level 1 length 2, level 2 length 1; Np = 3
    counts = np.zeros((2, 2))
    counts[0, 1] = 1
    counts[1, 0] = 1
    feats = _rlm_style_features(counts, 3, GLRLM_NAMES)
    assert feats["RunPercentage"] == pytest.approx(2 / 3)
    assert feats["LongRunEmphasis"] == pytest.approx((4 + 1) / 2)
    assert feats["HighGrayLevelRunEmphasis"] == pytest.approx((1 + 4) / 2)


def test_isolated_pixels_fall_back_to_degenerate_glcm():
    levels = np.zeros((5, 5), dtype=np.int64)
    levels[0, 0] = levels[0, 2] = levels[2, 0] = levels[2, 2] = 3
    q = roi_from_levels(levels, 3)
    feats = glcm_features(q)
    assert feats["MaximumProbability"] == 1.0
    assert feats["Autocorrelation"] == 9.0
    assert set(feats) == set(GLCM_NAMES)

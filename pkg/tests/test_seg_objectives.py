"""Loss kernels and segmentation evaluation metrics."""

import math

import numpy as np
import pytest

from conftest import label_map
from hrpqct.errors import DataError, NumericError
from hrpqct.seg_objectives import (
    cross_entropy_grad,
    cross_entropy_loss,
    dice_loss,
    dice_scores,
    eval_segmentation,
    onehot_from_labels,
    softmax_channels,
    total_loss,
)


def logits_for_probs(probs):
    """Logits whose softmax reproduces the given channel probabilities."""
    return np.log(np.asarray(probs, dtype=np.float64))


def test_softmax_symmetry_and_closed_form():
    logits = np.zeros((1, 2, 1))
    assert softmax_channels(logits)[0, :, 0] == pytest.approx([0.5, 0.5])
    logits = np.array([[[math.log(1.0)], [math.log(3.0)]]])
    probs = softmax_channels(logits)
    assert probs[0, :, 0] == pytest.approx([0.25, 0.75])


def test_softmax_shift_invariance(rng):
    logits = rng.normal(size=(2, 4, 6))
    shifted = logits + 13.7
    assert np.abs(softmax_channels(logits) - softmax_channels(shifted)).max() < 1e-12
    sums = softmax_channels(logits).sum(axis=1)
    assert np.abs(sums - 1.0).max() < 1e-12


def test_softmax_rejects_nan():
    logits = np.zeros((1, 2, 1))
    logits[0, 0, 0] = np.nan
    with pytest.raises(NumericError):
        softmax_channels(logits)


def test_cross_entropy_uniform_logits():
    c = 6
    logits = np.zeros((2, c, 5))
    labels = np.zeros((2, 5), dtype=int)
    assert abs(cross_entropy_loss(logits, labels) - math.log(c)) < 1e-12


def test_cross_entropy_monotone_in_true_logit():
    losses = []
    for boost in (0.0, 2.0, 5.0, 20.0, 200.0):
        logits = np.zeros((1, 3, 1))
        logits[0, 1, 0] = boost
        losses.append(cross_entropy_loss(logits, np.array([[1]])))
    assert all(a > b for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 1e-12


def test_cross_entropy_hand_case():
    # N=1, C=2, K=2; true-class probabilities 0.8 and 0.6
    probs = np.array([[[0.8, 0.6], [0.2, 0.4]]])
    logits = logits_for_probs(probs)
    labels = np.zeros((1, 2), dtype=int)
    expected = -(math.log(0.8) + math.log(0.6)) / 2.0
    assert cross_entropy_loss(logits, labels) == pytest.approx(expected, abs=1e-12)


def test_cross_entropy_label_out_of_range():
    with pytest.raises(DataError):
        cross_entropy_loss(np.zeros((1, 2, 1)), np.array([[2]]))


def test_dice_perfect_prediction_is_zero():
    labels = np.array([[0, 1, 2, 1]])
    logits = np.zeros((1, 3, 4))
    for k, c in enumerate(labels[0]):
        logits[0, :, k] = -500.0
        logits[0, c, k] = 500.0
    onehot = onehot_from_labels(labels, 3)
    assert dice_loss(logits, onehot) == pytest.approx(0.0, abs=1e-9)


def test_dice_hand_case():
    eps = 1e-6
    probs = np.array([[[0.8, 0.6], [0.2, 0.4]]])
    logits = logits_for_probs(probs)
    onehot = onehot_from_labels(np.zeros((1, 2), dtype=int), 2)
    score0 = (2 * (0.8 + 0.6) + eps) / ((0.8 + 0.6) + 2.0 + eps)
    score1 = (0.0 + eps) / ((0.2 + 0.4) + 0.0 + eps)
    expected = 1.0 - (score0 + score1) / 2.0
    assert dice_loss(logits, onehot, eps=eps) == pytest.approx(expected, abs=1e-12)


def test_dice_absent_class_with_zero_mass_scores_one():
    # class 1 absent from truth and numerically zero predicted mass
    logits = np.array([[[500.0, 500.0], [-500.0, -500.0]]])
    onehot = onehot_from_labels(np.zeros((1, 2), dtype=int), 2)
    scores = dice_scores(logits, onehot)
    assert scores[0, 1] == pytest.approx(1.0)  # eps / eps
    assert scores[0, 0] == pytest.approx(1.0, abs=1e-9)


def test_dice_scores_within_unit_interval(rng):
    logits = rng.normal(size=(3, 4, 10))
    labels = rng.integers(0, 4, size=(3, 10))
    scores = dice_scores(logits, onehot_from_labels(labels, 4))
    assert (scores > 0).all() and (scores <= 1.0 + 1e-9).all()


def test_total_loss_is_sum_of_components(rng):
    logits = rng.normal(size=(2, 5, 8))
    labels = rng.integers(0, 5, size=(2, 8))
    onehot = onehot_from_labels(labels, 5)
    ce = cross_entropy_loss(logits, labels)
    dl = dice_loss(logits, onehot)
    assert abs(total_loss(logits, labels, onehot) - (ce + dl)) < 1e-12


def test_total_loss_hand_case():
    eps = 1e-6
    probs = np.array([[[0.8, 0.6], [0.2, 0.4]]])
    logits = logits_for_probs(probs)
    labels = np.zeros((1, 2), dtype=int)
    onehot = onehot_from_labels(labels, 2)
    ce = -(math.log(0.8) + math.log(0.6)) / 2.0
    score0 = (2 * 1.4 + eps) / (1.4 + 2.0 + eps)
    score1 = eps / (0.6 + eps)
    expected = ce + 1.0 - (score0 + score1) / 2.0
    assert total_loss(logits, labels, onehot, eps=eps) == pytest.approx(expected, abs=1e-9)


def test_cross_entropy_gradient_matches_finite_differences(rng):
    for _ in range(5):
        logits = rng.normal(size=(2, 3, 4))
        labels = rng.integers(0, 3, size=(2, 4))
        grad = cross_entropy_grad(logits, labels)
        step = 1e-5
        for _ in range(6):
            n = rng.integers(0, 2)
            c = rng.integers(0, 3)
            k = rng.integers(0, 4)
            lp = logits.copy()
            lp[n, c, k] += step
            lm = logits.copy()
            lm[n, c, k] -= step
            fd = (cross_entropy_loss(lp, labels) - cross_entropy_loss(lm, labels)) / (
                2 * step
            )
            denom = max(abs(fd), 1e-8)
            assert abs(grad[n, c, k] - fd) / denom < 1e-6


def test_eval_segmentation_identity_and_disjoint():
    a = label_map([[1, 1], [0, 0]])
    metrics = eval_segmentation(a, a)
    for m in metrics.values():
        assert m.precision == 1.0 and m.recall == 1.0 and m.f1 == 1.0 and m.iou == 1.0
    b = label_map([[0, 0], [1, 1]])
    disjoint = eval_segmentation(a, b)[1]
    assert disjoint.precision == 0.0 and disjoint.recall == 0.0
    assert disjoint.f1 == 0.0 and disjoint.iou == 0.0


def test_eval_segmentation_hand_counts():
    truth = label_map([[1, 1], [0, 0]])
    pred = label_map([[1, 0], [0, 0]])
    m = eval_segmentation(pred, truth)[1]
    assert m.precision == 1.0
    assert m.recall == 0.5
    assert m.f1 == pytest.approx(2 / 3)
    assert m.iou == 0.5


def test_eval_segmentation_dimension_mismatch():
    with pytest.raises(DataError):
        eval_segmentation(label_map([[1]]), label_map([[1, 1]]))


def test_f1_iou_identity(rng):
    pred = label_map(rng.integers(0, 4, size=(12, 12)).astype(np.uint8))
    truth = label_map(rng.integers(0, 4, size=(12, 12)).astype(np.uint8))
    for m in eval_segmentation(pred, truth).values():
        if not math.isnan(m.f1) and not math.isnan(m.iou):
            assert abs(m.f1 - 2 * m.iou / (1 + m.iou)) < 1e-12

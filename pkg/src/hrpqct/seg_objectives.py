"""Numeric kernels for the segmentation training objective and evaluation.

Shapes follow the (batch N, classes C, pixels K) layout. These kernels let
an external training run be verified bit-for-bit: the cross-entropy term
is the mean negative log-softmax of the true class, the Dice term is one
minus the mean per-image per-class Dice score, and the total is their sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError
from .types import LabelMap

DICE_EPS = 1e-6


def _check_logits(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 3:
        raise DataError("logits must have shape (N, C, K)")
    if not np.isfinite(logits).all():
        raise NumericError("non-finite logits")
    return logits


def softmax_channels(logits: np.ndarray) -> np.ndarray:
    """Softmax across the class axis, computed with max-subtraction."""
    logits = _check_logits(logits)
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax_channels(logits: np.ndarray) -> np.ndarray:
    logits = _check_logits(logits)
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def onehot_from_labels(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """(N, K) integer labels -> (N, C, K) one-hot volume."""
    labels = np.asarray(labels)
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= n_classes:
        raise DataError(f"labels out of range 0..{n_classes - 1}")
    n, k = labels.shape
    onehot = np.zeros((n, n_classes, k), dtype=np.float64)
    nn, kk = np.meshgrid(np.arange(n), np.arange(k), indexing="ij")
    onehot[nn, labels, kk] = 1.0
    return onehot


def cross_entropy_loss(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-softmax of the true class over all N*K pixels."""
    logits = _check_logits(logits)
    labels = np.asarray(labels)
    n, c, k = logits.shape
    if labels.shape != (n, k):
        raise DataError(f"labels shape {labels.shape} does not match (N, K)=({n}, {k})")
    if labels.min() < 0 or labels.max() >= c:
        raise DataError(f"labels out of range 0..{c - 1}")
    log_probs = log_softmax_channels(logits)
    nn, kk = np.meshgrid(np.arange(n), np.arange(k), indexing="ij")
    picked = log_probs[nn, labels, kk]
    return float(-picked.sum() / (n * k))


def cross_entropy_grad(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Analytic gradient of cross_entropy_loss w.r.t. the logits."""
    probs = softmax_channels(logits)
    n, c, k = probs.shape
    onehot = onehot_from_labels(np.asarray(labels), c)
    return (probs - onehot) / (n * k)


def dice_scores(logits: np.ndarray, onehot: np.ndarray, eps: float = DICE_EPS) -> np.ndarray:
    """Per-(image, class) Dice scores between softmax probabilities and one-hot truth."""
    probs = softmax_channels(logits)
    onehot = np.asarray(onehot, dtype=np.float64)
    if onehot.shape != probs.shape:
        raise DataError(f"one-hot shape {onehot.shape} does not match logits {probs.shape}")
    inter = (probs * onehot).sum(axis=2)
    denom = probs.sum(axis=2) + onehot.sum(axis=2)
    return (2.0 * inter + eps) / (denom + eps)


def dice_loss(logits: np.ndarray, onehot: np.ndarray, eps: float = DICE_EPS) -> float:
    """1 - mean Dice score over all N*C entries (background included)."""
    return float(1.0 - dice_scores(logits, onehot, eps=eps).mean())


def total_loss(
    logits: np.ndarray, labels: np.ndarray, onehot: np.ndarray, eps: float = DICE_EPS
) -> float:
    return cross_entropy_loss(logits, labels) + dice_loss(logits, onehot, eps=eps)


@dataclass(frozen=True)
class SegClassMetrics:
    precision: float
    recall: float
    f1: float
    iou: float


def eval_segmentation(pred: LabelMap, truth: LabelMap) -> dict[int, SegClassMetrics]:
    """Per-class precision/recall/F1/IoU.

    Classes absent from both maps are omitted; 0/0 ratios within a present
    class are reported as NaN sentinels and should be excluded from means.
    """
    if pred.data.shape != truth.data.shape:
        raise DataError("prediction and truth dimensions differ")
    out: dict[int, SegClassMetrics] = {}
    classes = sorted(set(np.unique(pred.data)) | set(np.unique(truth.data)))
    for c in classes:
        p = pred.data == c
        t = truth.data == c
        tp = int(np.sum(p & t))
        fp = int(np.sum(p & ~t))
        fn = int(np.sum(~p & t))
        precision = tp / (tp + fp) if tp + fp else float("nan")
        recall = tp / (tp + fn) if tp + fn else float("nan")
        f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else float("nan")
        iou = tp / (tp + fp + fn) if tp + fp + fn else float("nan")
        out[int(c)] = SegClassMetrics(precision=precision, recall=recall, f1=f1, iou=iou)
    return out

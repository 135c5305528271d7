"""Classification metrics, ROC analysis, patient-level aggregation, and the
logistic inference layer (Wald intervals, VIF, Hosmer-Lemeshow).

Tie conventions are fixed for determinism: ROC thresholds sit at distinct
score values with the convention score >= threshold -> positive, AUROC is
the trapezoidal area (equal to the Mann-Whitney U statistic with ties
counted half), and the Youden threshold prefers smaller FPR then lower
threshold on ties.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConfigError, DataError, NumericError
from .io import CohortManifest, FeatureTable

EXPECTED_SLICES = 168


def classification_metrics(labels: np.ndarray, predictions: np.ndarray) -> dict[str, float]:
    """accuracy, sensitivity, specificity, f1 on the positive (osteoporosis) class.

    Metrics with an empty denominator come back as NaN sentinels.
    """
    labels = np.asarray(labels).astype(int)
    predictions = np.asarray(predictions).astype(int)
    if labels.shape != predictions.shape:
        raise DataError("labels and predictions must have the same shape")
    tp = int(np.sum((labels == 1) & (predictions == 1)))
    tn = int(np.sum((labels == 0) & (predictions == 0)))
    fp = int(np.sum((labels == 0) & (predictions == 1)))
    fn = int(np.sum((labels == 1) & (predictions == 0)))
    return {
        "accuracy": (tp + tn) / labels.size if labels.size else float("nan"),
        "sensitivity": tp / (tp + fn) if tp + fn else float("nan"),
        "specificity": tn / (tn + fp) if tn + fp else float("nan"),
        "f1": 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else float("nan"),
    }


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # +inf for the (0, 0) point
    auroc: float


def roc_auroc(labels: np.ndarray, scores: np.ndarray) -> RocCurve:
    labels = np.asarray(labels).astype(int)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUROC needs both positive and negative labels")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    distinct = np.flatnonzero(np.diff(sorted_scores) != 0)
    cut_points = np.concatenate([distinct, [scores.size - 1]])
    tp_cum = np.cumsum(sorted_labels)
    fp_cum = np.cumsum(1 - sorted_labels)
    tpr = np.concatenate([[0.0], tp_cum[cut_points] / n_pos])
    fpr = np.concatenate([[0.0], fp_cum[cut_points] / n_neg])
    thresholds = np.concatenate([[np.inf], sorted_scores[cut_points]])
    auroc = float(np.trapezoid(tpr, fpr))
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auroc=auroc)


def youden_threshold(curve: RocCurve) -> float:
    """Threshold maximizing J = TPR - FPR; ties prefer smaller FPR, then
    lower threshold."""
    j = curve.tpr - curve.fpr
    keys = sorted(
        range(len(j)),
        key=lambda i: (-j[i], curve.fpr[i], curve.thresholds[i]),
    )
    return float(curve.thresholds[keys[0]])


def aggregate_patient(table: FeatureTable, manifest: CohortManifest) -> FeatureTable:
    """Arithmetic mean of each feature over a patient's slices, per region.

    The slice_index column of the output holds the number of slices
    aggregated; a warning is raised when it differs from 168.
    """
    keys: dict[tuple[str, str], list[int]] = {}
    for i in range(table.n_rows):
        keys.setdefault((table.patient_ids[i], table.regions[i]), []).append(i)
    known = {p.patient_id for p in manifest.patients}
    pids, counts, regions, rows = [], [], [], []
    for (pid, region), idx in sorted(keys.items()):
        if pid not in known:
            raise DataError(f"feature table references unknown patient {pid}")
        if len(idx) != EXPECTED_SLICES:
            warnings.warn(
                f"patient {pid} region {region}: {len(idx)} slices (expected {EXPECTED_SLICES})"
            )
        pids.append(pid)
        regions.append(region)
        counts.append(len(idx))
        rows.append(table.values[idx].mean(axis=0))
    return FeatureTable(
        patient_ids=pids,
        slice_indices=counts,
        regions=regions,
        names=list(table.names),
        values=np.vstack(rows),
    )


def _irls_logistic(
    X: np.ndarray, y: np.ndarray, max_iter: int = 100, tol: float = 1e-12
) -> tuple[np.ndarray, np.ndarray, float]:
    """Unpenalized ML logistic fit. Returns (beta, information, loglik);
    raises on detected perfect separation."""
    n, m = X.shape
    Xa = np.hstack([np.ones((n, 1)), X])
    beta = np.zeros(m + 1)
    for _ in range(max_iter):
        eta = Xa @ beta
        p = 1.0 / (1.0 + np.exp(-np.clip(eta, -500, 500)))
        w = np.maximum(p * (1 - p), 1e-14)
        grad = Xa.T @ (y - p)
        info = (Xa * w[:, None]).T @ Xa
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"singular information matrix: {exc}") from exc
        beta += step
        if np.abs(beta).max() > 1e3:
            raise NumericError("perfect separation: coefficients diverge")
        if np.abs(step).max() < tol:
            break
    eta = Xa @ beta
    p = 1.0 / (1.0 + np.exp(-np.clip(eta, -500, 500)))
    if np.all(np.abs(y - p) < 1e-8):
        raise NumericError("perfect separation: fitted probabilities reached the labels")
    pc = np.clip(p, 1e-300, 1 - 1e-16)
    loglik = float((y * np.log(pc) + (1 - y) * np.log(1 - pc)).sum())
    w = np.maximum(p * (1 - p), 1e-14)
    info = (Xa * w[:, None]).T @ Xa
    return beta, info, loglik


def vif(X: np.ndarray) -> np.ndarray:
    """Variance inflation factors; an exactly collinear column reports +inf."""
    X = np.asarray(X, dtype=np.float64)
    n, m = X.shape
    out = np.empty(m)
    for j in range(m):
        target = X[:, j]
        others = np.hstack([np.ones((n, 1)), np.delete(X, j, axis=1)])
        coef, *_ = np.linalg.lstsq(others, target, rcond=None)
        resid = target - others @ coef
        ss_res = float(resid @ resid)
        ss_tot = float(((target - target.mean()) ** 2).sum())
        if ss_tot == 0.0:
            out[j] = float("inf")
            continue
        r2 = 1.0 - ss_res / ss_tot
        out[j] = float("inf") if r2 >= 1.0 - 1e-12 else 1.0 / (1.0 - r2)
    return out


def chi2_sf(x: float, dof: int) -> float:
    """Upper tail of the chi-squared distribution via the regularized
    incomplete gamma function."""
    if x < 0 or dof < 1:
        raise ConfigError("chi2_sf requires x >= 0 and dof >= 1")
    return float(special.gammaincc(dof / 2.0, x / 2.0))


@dataclass(frozen=True)
class HosmerLemeshowResult:
    statistic: float
    dof: int
    p_value: float
    table: tuple[tuple[int, float, int], ...]  # (n_g, expected, observed) per group


def hosmer_lemeshow(
    probs: np.ndarray, labels: np.ndarray, groups: int = 10
) -> HosmerLemeshowResult:
    """Deciles-of-risk goodness-of-fit test.

    Groups are equal-count by predicted probability with ties kept in the
    same group; groups whose expected count is 0 or n_g are merged into the
    next group. dof = effective groups - 2.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels).astype(int)
    n = probs.size
    if n < groups:
        raise DataError(f"need at least {groups} rows for {groups} groups")
    if np.any(probs <= 0.0) or np.any(probs >= 1.0):
        raise DataError("probabilities must lie strictly inside (0, 1)")
    order = np.argsort(probs, kind="stable")
    sp = probs[order]
    sl = labels[order]
    bounds = [round(g * n / groups) for g in range(1, groups + 1)]
    cells: list[tuple[int, float, int]] = []
    start = 0
    for b in bounds:
        end = b
        # keep ties together: extend while the next value equals the boundary value
        while 0 < end < n and sp[end] == sp[end - 1]:
            end += 1
        if end <= start:
            continue
        seg_p = sp[start:end]
        seg_l = sl[start:end]
        cells.append((end - start, float(seg_p.sum()), int(seg_l.sum())))
        start = end
        if start >= n:
            break
    # merge groups with degenerate expectations into their right neighbor
    merged: list[tuple[int, float, int]] = []
    for cell in cells:
        if merged:
            ng, e, o = merged[-1]
            if e <= 0.0 or e >= ng:
                merged[-1] = (ng + cell[0], e + cell[1], o + cell[2])
                continue
        merged.append(cell)
    if len(merged) > 1:
        ng, e, o = merged[-1]
        if e <= 0.0 or e >= ng:
            prev = merged[-2]
            merged[-2] = (prev[0] + ng, prev[1] + e, prev[2] + o)
            merged.pop()
    stat = 0.0
    for ng, e, o in merged:
        denom = e * (1.0 - e / ng)
        if denom <= 0:
            raise NumericError("degenerate Hosmer-Lemeshow group after merging")
        stat += (o - e) ** 2 / denom
    dof = max(len(merged) - 2, 1)
    return HosmerLemeshowResult(
        statistic=float(stat), dof=dof, p_value=chi2_sf(stat, dof), table=tuple(merged)
    )


@dataclass(frozen=True)
class VariableInference:
    name: str
    beta: float
    odds_ratio: float
    ci_low: float
    ci_high: float
    p_value: float
    vif: float
    significant: bool


@dataclass
class LogisticInference:
    variables: list[VariableInference]
    intercept: float
    log_likelihood: float
    hosmer_lemeshow: HosmerLemeshowResult | None = None
    fitted_probs: np.ndarray = field(default_factory=lambda: np.empty(0))

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        beta = np.array([v.beta for v in self.variables])
        eta = self.intercept + np.asarray(X, dtype=np.float64) @ beta
        return 1.0 / (1.0 + np.exp(-np.clip(eta, -500, 500)))


def logistic_inference(
    X: np.ndarray,
    y: np.ndarray,
    names: list[str] | None = None,
    hl_groups: int = 10,
    alpha: float = 0.05,
) -> LogisticInference:
    """Maximum-likelihood logistic regression with Wald inference.

    Wald SEs come from the inverse observed information; CI bounds are
    exp(beta +- 1.96 SE); p-values are two-sided normal.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DataError("X must be 2D with one row per label")
    beta, info, loglik = _irls_logistic(X, y)
    cov = np.linalg.inv(info)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    z975 = 1.959963984540054
    vifs = vif(X) if X.shape[1] > 1 else np.ones(1)
    variables = []
    names = names or [f"x{j}" for j in range(X.shape[1])]
    for j in range(X.shape[1]):
        b = float(beta[j + 1])
        s = float(se[j + 1])
        z = b / s if s > 0 else float("inf")
        p = float(2.0 * special.ndtr(-abs(z)))
        variables.append(
            VariableInference(
                name=names[j],
                beta=b,
                odds_ratio=math.exp(b),
                ci_low=math.exp(b - z975 * s),
                ci_high=math.exp(b + z975 * s),
                p_value=p,
                vif=float(vifs[j]),
                significant=p < alpha,
            )
        )
    inference = LogisticInference(
        variables=variables, intercept=float(beta[0]), log_likelihood=loglik
    )
    probs = inference.predict_proba(X)
    inference.fitted_probs = probs
    if y.size >= hl_groups and np.all((probs > 0) & (probs < 1)):
        inference.hosmer_lemeshow = hosmer_lemeshow(probs, y.astype(int), hl_groups)
    return inference

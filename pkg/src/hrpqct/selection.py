"""Three-stage feature reduction: min-max normalization fitted on training
rows, variance thresholding, greedy correlation pruning, and LASSO.

The LASSO solves (1/2n)||y - b0 - X b||^2 + lambda*||b||_1 by cyclic
coordinate descent with soft thresholding and an unpenalized intercept.
Selection state is a pure function of the training rows; survivor sets
nest across the three stages.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .io import FeatureTable

VARIANCE_THRESHOLD = 0.02
CORRELATION_MAX = 0.9
LASSO_TOL = 1e-8
LASSO_MAX_SWEEPS = 100_000


@dataclass
class SelectionModel:
    feature_names: list[str]
    mins: np.ndarray
    maxs: np.ndarray
    variance_survivors: list[str] = field(default_factory=list)
    correlation_survivors: list[str] = field(default_factory=list)
    lasso_coefficients: dict[str, float] = field(default_factory=dict)
    lasso_intercept: float = 0.0
    lasso_lambda: float = 0.0
    top_k: int | None = None
    selected: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "schema": "selection-model/1",
            "feature_names": self.feature_names,
            "mins": list(map(float, self.mins)),
            "maxs": list(map(float, self.maxs)),
            "variance_survivors": self.variance_survivors,
            "correlation_survivors": self.correlation_survivors,
            "lasso_coefficients": self.lasso_coefficients,
            "lasso_intercept": self.lasso_intercept,
            "lasso_lambda": self.lasso_lambda,
            "top_k": self.top_k,
            "selected": self.selected,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SelectionModel":
        doc = json.loads(text)
        if doc.get("schema") != "selection-model/1":
            raise DataError("not a selection-model document")
        return cls(
            feature_names=doc["feature_names"],
            mins=np.asarray(doc["mins"], dtype=np.float64),
            maxs=np.asarray(doc["maxs"], dtype=np.float64),
            variance_survivors=doc["variance_survivors"],
            correlation_survivors=doc["correlation_survivors"],
            lasso_coefficients={k: float(v) for k, v in doc["lasso_coefficients"].items()},
            lasso_intercept=float(doc["lasso_intercept"]),
            lasso_lambda=float(doc["lasso_lambda"]),
            top_k=doc["top_k"],
            selected=doc["selected"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SelectionModel":
        return cls.from_json(Path(path).read_text())


def fit_minmax(train: FeatureTable) -> SelectionModel:
    if train.n_rows == 0:
        raise DataError("cannot fit normalization on an empty table")
    return SelectionModel(
        feature_names=list(train.names),
        mins=train.values.min(axis=0),
        maxs=train.values.max(axis=0),
    )


def apply_minmax(model: SelectionModel, table: FeatureTable) -> FeatureTable:
    """x' = (x - min_train) / (max_train - min_train); constant training
    features map to 0; values outside the training range are not clamped."""
    if table.names != model.feature_names:
        raise DataError("feature names do not match the fitted normalizer")
    span = model.maxs - model.mins
    safe = np.where(span > 0, span, 1.0)
    values = (table.values - model.mins) / safe
    values[:, span == 0] = 0.0
    return FeatureTable(
        patient_ids=list(table.patient_ids),
        slice_indices=list(table.slice_indices),
        regions=list(table.regions),
        names=list(table.names),
        values=values,
    )


def variance_filter(table: FeatureTable, threshold: float = VARIANCE_THRESHOLD) -> list[str]:
    """Names of features whose population variance exceeds the threshold."""
    var = table.values.var(axis=0)
    return [n for n, v in zip(table.names, var) if v > threshold]


def _correlation_matrix(values: np.ndarray) -> np.ndarray:
    """Pearson correlations; columns with zero variance correlate 0."""
    n = values.shape[0]
    centered = values - values.mean(axis=0)
    std = centered.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    z = centered / safe
    corr = z.T @ z / n
    corr[std == 0, :] = 0.0
    corr[:, std == 0] = 0.0
    np.fill_diagonal(corr, 1.0)
    return corr


def correlation_filter(table: FeatureTable, r_max: float = CORRELATION_MAX) -> list[str]:
    """Greedy pruning of feature pairs with |r| > r_max, strongest pair first.

    From each offending pair the feature with the larger mean absolute
    correlation to the remaining alive features is dropped; exact ties drop
    the later column.
    """
    corr = np.abs(_correlation_matrix(table.values))
    m = len(table.names)
    iu, ju = np.triu_indices(m, k=1)
    offending = corr[iu, ju] > r_max
    pairs = sorted(
        zip(iu[offending], ju[offending]),
        key=lambda ij: (-corr[ij[0], ij[1]], ij[0], ij[1]),
    )
    alive = np.ones(m, dtype=bool)
    for i, j in pairs:
        if not (alive[i] and alive[j]):
            continue
        mean_i = corr[i, alive].sum() - 1.0
        mean_j = corr[j, alive].sum() - 1.0
        # Same alive count for both, so comparing sums equals comparing means.
        drop = j if mean_j >= mean_i else i
        alive[drop] = False
    return [n for n, a in zip(table.names, alive) if a]


def lasso_lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest lambda at which all coefficients are zero."""
    n = X.shape[0]
    return float(np.abs(X.T @ (y - y.mean())).max() / n)


def lasso_fit(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    tol: float = LASSO_TOL,
    max_sweeps: int = LASSO_MAX_SWEEPS,
    warm_start: tuple[np.ndarray, float] | None = None,
) -> tuple[np.ndarray, float, int]:
    """Cyclic coordinate descent; returns (coefficients, intercept, sweeps)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NumericError("LASSO requires finite inputs")
    n, m = X.shape
    if n < 2:
        raise DataError("LASSO requires at least 2 rows")
    if warm_start is not None:
        beta = warm_start[0].copy()
        intercept = warm_start[1]
    else:
        beta = np.zeros(m)
        intercept = float(y.mean())
    col_sq = (X * X).sum(axis=0) / n
    resid = y - intercept - X @ beta
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(m):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = (X[:, j] @ resid) / n + col_sq[j] * old
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
            if new != old:
                resid += X[:, j] * (old - new)
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        new_intercept = intercept + resid.mean()
        max_delta = max(max_delta, abs(new_intercept - intercept))
        resid -= new_intercept - intercept
        intercept = new_intercept
        if max_delta < tol:
            break
    return beta, intercept, sweep


def lasso_objective(
    X: np.ndarray, y: np.ndarray, beta: np.ndarray, intercept: float, lam: float
) -> float:
    n = X.shape[0]
    resid = y - intercept - X @ beta
    return float((resid @ resid) / (2 * n) + lam * np.abs(beta).sum())


def lasso_kkt_violation(
    X: np.ndarray, y: np.ndarray, beta: np.ndarray, intercept: float, lam: float
) -> float:
    """Largest |x_j' r / n| over zero coefficients; <= lam at optimality."""
    n = X.shape[0]
    resid = y - intercept - X @ beta
    grads = np.abs(X.T @ resid) / n
    zeros = beta == 0.0
    return float(grads[zeros].max()) if zeros.any() else 0.0


def lambda_grid(lam_max: float, n_points: int = 50, ratio: float = 1e-3) -> np.ndarray:
    return np.geomspace(lam_max, lam_max * ratio, n_points)


def lasso_cv_lambda(
    X: np.ndarray,
    y: np.ndarray,
    groups: list[str],
    folds: int = 5,
    n_points: int = 50,
    seed: int = 0,
) -> float:
    """Pick lambda by grouped K-fold CV squared error over a log grid,
    warm-starting along the path."""
    from .classifiers.cv import make_grouped_folds

    lam_max = lasso_lambda_max(X, y)
    if lam_max == 0.0:
        return 0.0
    grid = lambda_grid(lam_max, n_points)
    fold_indices = make_grouped_folds(groups, folds, seed=seed)
    errors = np.zeros(len(grid))
    for train_idx, val_idx in fold_indices:
        Xt, yt = X[train_idx], y[train_idx]
        Xv, yv = X[val_idx], y[val_idx]
        warm = None
        for gi, lam in enumerate(grid):
            beta, intercept, _ = lasso_fit(Xt, yt, lam, warm_start=warm)
            warm = (beta, intercept)
            pred = intercept + Xv @ beta
            errors[gi] += float(((yv - pred) ** 2).sum())
    return float(grid[int(np.argmin(errors))])


def select_features(model: SelectionModel, mode: str = "nonzero") -> list[str]:
    """Final names: nonzero keeps beta != 0; top_k keeps the k largest |beta|
    among nonzero coefficients (ties by column order)."""
    names = model.correlation_survivors
    coefs = np.array([model.lasso_coefficients.get(n, 0.0) for n in names])
    nonzero = [n for n, b in zip(names, coefs) if b != 0.0]
    if mode == "nonzero":
        return nonzero
    if mode == "top_k":
        k = model.top_k
        if k is None or k < 1:
            raise ConfigError("top_k mode requires a positive top_k")
        if not nonzero:
            raise NumericError("no informative features: all LASSO coefficients are zero")
        if len(nonzero) < k:
            warnings.warn(
                f"only {len(nonzero)} nonzero coefficients for top_k={k}; returning all"
            )
            return nonzero
        order = sorted(
            range(len(names)), key=lambda i: (-abs(coefs[i]), i)
        )
        picked = [names[i] for i in order if coefs[i] != 0.0][:k]
        return [n for n in names if n in set(picked)]  # preserve column order
    raise ConfigError(f"unknown selection mode: {mode!r}")


@dataclass(frozen=True)
class SelectionConfig:
    variance_threshold: float = VARIANCE_THRESHOLD
    r_max: float = CORRELATION_MAX
    lasso_lambda: float | str = "auto"  # "auto" -> grouped-CV choice
    top_k: int | None = None
    cv_folds: int = 5
    cv_points: int = 50
    seed: int = 0


def fit_selection(
    train: FeatureTable,
    labels: np.ndarray,
    groups: list[str],
    config: SelectionConfig = SelectionConfig(),
) -> SelectionModel:
    """Run the full three-stage selection on training rows only."""
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape[0] != train.n_rows:
        raise DataError("labels length does not match table rows")
    model = fit_minmax(train)
    normalized = apply_minmax(model, train)
    model.variance_survivors = variance_filter(normalized, config.variance_threshold)
    stage2 = normalized.subset(model.variance_survivors)
    model.correlation_survivors = correlation_filter(stage2, config.r_max)
    stage3 = normalized.subset(model.correlation_survivors)
    X = stage3.values
    if config.lasso_lambda == "auto":
        lam = lasso_cv_lambda(
            X,
            labels,
            groups,
            folds=config.cv_folds,
            n_points=config.cv_points,
            seed=config.seed,
        )
    else:
        lam = float(config.lasso_lambda)
    beta, intercept, _ = lasso_fit(X, labels, lam)
    model.lasso_coefficients = {
        n: float(b) for n, b in zip(model.correlation_survivors, beta)
    }
    model.lasso_intercept = intercept
    model.lasso_lambda = lam
    model.top_k = config.top_k
    model.selected = select_features(model, "top_k" if config.top_k else "nonzero")
    return model

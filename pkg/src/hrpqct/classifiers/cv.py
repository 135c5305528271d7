"""Grouped cross-validation: folds partition patients, never rows, so no
patient contributes to both the train and validation side of any fold."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError


def make_grouped_folds(
    groups: list[str], n_folds: int, seed: int = 0
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Round-robin assignment of shuffled unique group ids to folds.

    Fold membership depends only on the set of group ids and the seed, so
    adding rows for an existing group never moves any other group.
    """
    groups = list(groups)
    unique = sorted(set(groups))
    if len(unique) < n_folds:
        raise DataError(f"need at least {n_folds} distinct groups, got {len(unique)}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    order = rng.permutation(len(unique))
    fold_of_group = {unique[g]: i % n_folds for i, g in enumerate(order)}
    assignment = np.array([fold_of_group[g] for g in groups])
    folds = []
    for f in range(n_folds):
        val = np.flatnonzero(assignment == f)
        train = np.flatnonzero(assignment != f)
        folds.append((train, val))
    return folds


@dataclass
class GridSearchResult:
    best_params: dict
    best_score: float
    table: list[dict] = field(default_factory=list)  # one row per grid cell


def grid_search_cv(spec, X, y, groups, folds: int = 5) -> GridSearchResult:
    """Evaluate every grid cell with grouped K-fold CV; best cell has the
    highest mean AUROC, ties resolved by smaller grid index."""
    from itertools import product

    from ..stats import roc_auroc
    from .models import fit_classifier

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    fold_indices = make_grouped_folds(groups, folds, seed=spec.seed or 0)
    keys = list(spec.grid.keys())
    combos = [dict(zip(keys, vals)) for vals in product(*(spec.grid[k] for k in keys))]
    if not combos:
        combos = [{}]
    result = GridSearchResult(best_params={}, best_score=-np.inf)
    for idx, params in enumerate(combos):
        scores = []
        for train_idx, val_idx in fold_indices:
            model = fit_classifier(
                spec.family, params, X[train_idx], y[train_idx], seed=spec.seed
            )
            probs = model.predict_proba(X[val_idx])
            yv = y[val_idx]
            if yv.min() == yv.max():
                scores.append(np.nan)  # validation fold has one class only
            else:
                scores.append(roc_auroc(yv, probs).auroc)
        mean_score = float(np.nanmean(scores)) if not all(np.isnan(scores)) else np.nan
        if np.isnan(mean_score):
            raise DataError("every CV fold had single-class validation labels")
        result.table.append(
            {"grid_index": idx, "params": params, "fold_auroc": scores, "mean_auroc": mean_score}
        )
        if mean_score > result.best_score:
            result.best_score = mean_score
            result.best_params = params
    return result

"""Deterministic CART trees shared by the forest and boosting families.

Splits minimize within-node squared error (for binary 0/1 targets this is
equivalent to the Gini criterion), scanning features in index order and
thresholds ascending so ties resolve deterministically. Trees are stored
as flat JSON-ready node lists.
"""

from __future__ import annotations

import numpy as np

_EPS_IMPROVE = 1e-12


def _node_cost(total: float, total_sq: float, n: int) -> float:
    return total_sq - total * total / n


def _best_split(
    X: np.ndarray, y: np.ndarray, feature_ids: np.ndarray, min_leaf: int
) -> tuple[int, float, np.ndarray] | None:
    n = y.size
    best = None
    best_cost = _node_cost(float(y.sum()), float((y * y).sum()), n) - _EPS_IMPROVE
    for j in feature_ids:
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        ys = y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        total, total_sq = csum[-1], csq[-1]
        # candidate split after position i (left size i+1)
        for i in range(min_leaf - 1, n - min_leaf):
            if xs[i] == xs[i + 1]:
                continue
            nl = i + 1
            cost = _node_cost(csum[i], csq[i], nl) + _node_cost(
                total - csum[i], total_sq - csq[i], n - nl
            )
            if cost < best_cost:
                best_cost = cost
                best = (int(j), float((xs[i] + xs[i + 1]) / 2.0), col <= (xs[i] + xs[i + 1]) / 2.0)
    return best


class Tree:
    """Flat-array regression/classification tree."""

    def __init__(self, nodes: list[dict]):
        self.nodes = nodes
        self._compile()

    def _compile(self) -> None:
        n = len(self.nodes)
        self.feature = np.full(n, -1, dtype=np.int64)
        self.threshold = np.zeros(n)
        self.left = np.zeros(n, dtype=np.int64)
        self.right = np.zeros(n, dtype=np.int64)
        self.value = np.zeros(n)
        for i, node in enumerate(self.nodes):
            if "value" in node:
                self.value[i] = node["value"]
            else:
                self.feature[i] = node["feature"]
                self.threshold[i] = node["threshold"]
                self.left[i] = node["left"]
                self.right[i] = node["right"]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id per row."""
        idx = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[idx] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = idx[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            idx[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[idx] >= 0
        return idx

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def set_leaf_values(self, leaf_ids: np.ndarray, values: np.ndarray) -> None:
        for lid, v in zip(leaf_ids, values):
            self.nodes[int(lid)]["value"] = float(v)
        self._compile()

    def to_payload(self) -> list[dict]:
        return self.nodes

    @classmethod
    def from_payload(cls, nodes: list[dict]) -> "Tree":
        return cls(nodes)


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Grow a tree on (X, y); leaf values are target means.

    max_features limits the candidate features per split, drawn without
    replacement from the supplied generator (required when set).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, m = X.shape
    nodes: list[dict] = []

    def build(rows: np.ndarray, depth: int) -> int:
        node_id = len(nodes)
        nodes.append({})
        yr = y[rows]
        depth_ok = max_depth is None or depth < max_depth
        splittable = depth_ok and rows.size >= max(2, 2 * min_samples_leaf)
        split = None
        if splittable and yr.min() != yr.max():
            if max_features is not None and max_features < m:
                feature_ids = np.sort(rng.choice(m, size=max_features, replace=False))
            else:
                feature_ids = np.arange(m)
            split = _best_split(X[rows], yr, feature_ids, min_samples_leaf)
        if split is None:
            nodes[node_id] = {"value": float(yr.mean())}
            return node_id
        j, thr, left_local = split
        left_id = build(rows[left_local], depth + 1)
        right_id = build(rows[~left_local], depth + 1)
        nodes[node_id] = {"feature": j, "threshold": thr, "left": left_id, "right": right_id}
        return node_id

    build(np.arange(n), 0)
    return Tree(nodes)

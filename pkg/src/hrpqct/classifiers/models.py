"""The six classifier families, all deterministic and JSON-serializable.

  logistic_regression  L2-penalized logistic fit by IRLS (C grid)
  linear_svm           hinge + L2 via full-batch subgradient descent with a
                       fixed 1/(lambda*t) schedule; Platt sigmoid scores
  knn                  Euclidean k-NN, vote-fraction scores, distance ties
                       broken by lower training-row index
  gaussian_nb          per-class per-feature Gaussians, variance floor 1e-9
  random_forest        bagged CART with Gini splits and seeded bootstrap
  gradient_boosting    stagewise trees on the logistic gradient with
                       Newton leaf values

Stochastic families (random_forest, gradient_boosting uses none, but the
seed also fixes fold shuffling) draw from counter-based Philox streams, so
a fixed seed reproduces the fitted model bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError, NumericError
from .tree import Tree, grow_tree

FAMILIES = (
    "logistic_regression",
    "linear_svm",
    "knn",
    "gaussian_nb",
    "random_forest",
    "gradient_boosting",
)

STOCHASTIC_FAMILIES = ("random_forest",)

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "logistic_regression": {"C": [0.01, 0.1, 1.0, 10.0]},
    "linear_svm": {"C": [0.01, 0.1, 1.0, 10.0]},
    "knn": {"k": [5, 11, 21, 51]},
    "gaussian_nb": {},
    "random_forest": {"n_trees": [100, 300], "max_depth": [8, 16, None]},
    "gradient_boosting": {
        "learning_rate": [0.05, 0.1],
        "n_trees": [100, 300],
        "max_depth": [2, 3],
    },
}

NB_VAR_FLOOR = 1e-9
SVM_STEPS = 2000


@dataclass(frozen=True)
class ClassifierSpec:
    family: str
    grid: dict[str, list] = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown classifier family: {self.family!r}")
        if not self.grid:
            object.__setattr__(self, "grid", dict(DEFAULT_GRIDS[self.family]))
        if self.family in STOCHASTIC_FAMILIES and self.seed is None:
            raise ConfigError(f"{self.family} requires an explicit seed")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _check_xy(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64).ravel()
    if not np.isfinite(X).all():
        raise DataError("X must be finite")
    if set(np.unique(y)) - {0, 1}:
        raise DataError("y must be binary 0/1")
    if np.unique(y).size < 2:
        raise DataError("training labels contain a single class")
    if X.shape[0] != y.size:
        raise DataError("X and y row counts differ")
    if X.shape[0] < 2:
        raise DataError("need at least as many rows as classes")
    return X, y


@dataclass
class FittedClassifier:
    family: str
    hyperparams: dict
    payload: dict
    feature_names: list[str] | None = None

    def predict_proba(self, X: np.ndarray, feature_names: list[str] | None = None) -> np.ndarray:
        if feature_names is not None and self.feature_names is not None:
            if list(feature_names) != list(self.feature_names):
                raise DataError("feature names do not match the fitted model")
        X = np.asarray(X, dtype=np.float64)
        p = _PREDICTORS[self.family](self.payload, X)
        return np.clip(p, 0.0, 1.0)

    def predict(
        self,
        X: np.ndarray,
        threshold: float = 0.5,
        feature_names: list[str] | None = None,
    ) -> np.ndarray:
        return (self.predict_proba(X, feature_names) >= threshold).astype(np.int64)

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": "classifier-model/1",
                "family": self.family,
                "hyperparams": self.hyperparams,
                "feature_names": self.feature_names,
                "payload": self.payload,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "FittedClassifier":
        doc = json.loads(text)
        if doc.get("schema") != "classifier-model/1":
            raise DataError("not a classifier-model document")
        return cls(
            family=doc["family"],
            hyperparams=doc["hyperparams"],
            payload=doc["payload"],
            feature_names=doc["feature_names"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FittedClassifier":
        return cls.from_json(Path(path).read_text())


# --- logistic regression ---------------------------------------------------


def _fit_logistic(params: dict, X: np.ndarray, y: np.ndarray, seed) -> dict:
    C = float(params.get("C", 1.0))
    n, m = X.shape
    Xa = np.hstack([np.ones((n, 1)), X])
    beta = np.zeros(m + 1)
    ridge = np.ones(m + 1) / C
    ridge[0] = 0.0  # unpenalized intercept
    for _ in range(100):
        p = _sigmoid(Xa @ beta)
        w = np.maximum(p * (1 - p), 1e-10)
        grad = Xa.T @ (p - y) + ridge * beta
        hess = (Xa * w[:, None]).T @ Xa + np.diag(ridge)
        step = np.linalg.solve(hess, grad)
        beta -= step
        if np.abs(step).max() < 1e-10:
            break
    return {"intercept": float(beta[0]), "weights": beta[1:].tolist()}


def _predict_logistic(payload: dict, X: np.ndarray) -> np.ndarray:
    return _sigmoid(payload["intercept"] + X @ np.asarray(payload["weights"]))


# --- linear SVM with Platt scaling ------------------------------------------


def _platt_fit(f: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Fit p = sigmoid(a*f + b) on decision values with Platt target smoothing."""
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a, b = 1.0, 0.0
    for _ in range(100):
        z = a * f + b
        p = _sigmoid(z)
        g = p - t
        ga = float(g @ f)
        gb = float(g.sum())
        w = np.maximum(p * (1 - p), 1e-12)
        haa = float((w * f * f).sum()) + 1e-12
        hab = float((w * f).sum())
        hbb = float(w.sum()) + 1e-12
        det = haa * hbb - hab * hab
        if abs(det) < 1e-18:
            break
        da = (hbb * ga - hab * gb) / det
        db = (haa * gb - hab * ga) / det
        a -= da
        b -= db
        if max(abs(da), abs(db)) < 1e-12:
            break
    return a, b


def _fit_linear_svm(params: dict, X: np.ndarray, y: np.ndarray, seed) -> dict:
    C = float(params.get("C", 1.0))
    n, m = X.shape
    lam = 1.0 / (C * n)
    ys = 2.0 * y - 1.0
    w = np.zeros(m)
    b = 0.0
    for t in range(1, SVM_STEPS + 1):
        margins = ys * (X @ w + b)
        active = margins < 1.0
        grad_w = lam * w - (ys[active, None] * X[active]).sum(axis=0) / n
        grad_b = -ys[active].sum() / n
        eta = 1.0 / (lam * t)
        w -= eta * grad_w
        b -= eta * grad_b * min(1.0, lam)  # damp the unregularized intercept
    f = X @ w + b
    a, pb = _platt_fit(f, y)
    return {
        "weights": w.tolist(),
        "intercept": float(b),
        "platt_a": float(a),
        "platt_b": float(pb),
    }


def _predict_linear_svm(payload: dict, X: np.ndarray) -> np.ndarray:
    f = payload["intercept"] + X @ np.asarray(payload["weights"])
    return _sigmoid(payload["platt_a"] * f + payload["platt_b"])


# --- k nearest neighbors ----------------------------------------------------


def _fit_knn(params: dict, X: np.ndarray, y: np.ndarray, seed) -> dict:
    return {
        "k": int(params.get("k", 5)),
        "train_X": X.tolist(),
        "train_y": y.tolist(),
    }


def _predict_knn(payload: dict, X: np.ndarray) -> np.ndarray:
    train_X = np.asarray(payload["train_X"])
    train_y = np.asarray(payload["train_y"], dtype=np.float64)
    k = min(payload["k"], train_X.shape[0])
    d2 = ((X[:, None, :] - train_X[None, :, :]) ** 2).sum(axis=2)
    # stable sort keeps the lower training index first on distance ties
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return train_y[order].mean(axis=1)


# --- Gaussian naive Bayes ----------------------------------------------------


def _fit_gaussian_nb(params: dict, X: np.ndarray, y: np.ndarray, seed) -> dict:
    means, variances, priors = [], [], []
    for c in (0, 1):
        rows = X[y == c]
        means.append(rows.mean(axis=0).tolist())
        variances.append(np.maximum(rows.var(axis=0), NB_VAR_FLOOR).tolist())
        priors.append(rows.shape[0] / X.shape[0])
    return {"means": means, "variances": variances, "priors": priors}


def _predict_gaussian_nb(payload: dict, X: np.ndarray) -> np.ndarray:
    logps = []
    for c in (0, 1):
        mu = np.asarray(payload["means"][c])
        var = np.asarray(payload["variances"][c])
        ll = -0.5 * (np.log(2 * np.pi * var) + (X - mu) ** 2 / var).sum(axis=1)
        logps.append(ll + np.log(payload["priors"][c]))
    z = np.stack(logps, axis=1)
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e[:, 1] / e.sum(axis=1)


# --- random forest ------------------------------------------------------------


def _fit_random_forest(params: dict, X: np.ndarray, y: np.ndarray, seed) -> dict:
    n_trees = int(params.get("n_trees", 100))
    max_depth = params.get("max_depth", None)
    n, m = X.shape
    max_features = params.get("max_features", "sqrt")
    if max_features == "sqrt":
        mf = max(1, int(np.sqrt(m)))
    else:
        mf = int(max_features) if max_features is not None else None
    trees = []
    yf = y.astype(np.float64)
    for t in range(n_trees):
        rng = np.random.Generator(np.random.Philox(key=[seed, t]))
        boot = rng.integers(0, n, size=n)
        tree = grow_tree(
            X[boot], yf[boot], max_depth=max_depth, max_features=mf, rng=rng
        )
        trees.append(tree.to_payload())
    return {"trees": trees, "max_depth": max_depth}


def _predict_random_forest(payload: dict, X: np.ndarray) -> np.ndarray:
    preds = [Tree.from_payload(nodes).predict(X) for nodes in payload["trees"]]
    return np.mean(preds, axis=0)


# --- gradient boosting ---------------------------------------------------------


def _log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return float(-(y * np.log(p) + (1 - y) * np.log(1 - p)).mean())


def _fit_gradient_boosting(params: dict, X: np.ndarray, y: np.ndarray, seed) -> dict:
    lr = float(params.get("learning_rate", 0.1))
    n_trees = int(params.get("n_trees", 100))
    max_depth = int(params.get("max_depth", 3))
    yf = y.astype(np.float64)
    base = np.clip(yf.mean(), 1e-12, 1 - 1e-12)
    f0 = float(np.log(base / (1 - base)))
    F = np.full(y.size, f0)
    trees = []
    loss_path = []
    for _ in range(n_trees):
        p = _sigmoid(F)
        residual = yf - p
        tree = grow_tree(X, residual, max_depth=max_depth)
        leaves = tree.apply(X)
        # Newton leaf values: sum(residual) / sum(p(1-p)) per leaf
        for lid in np.unique(leaves):
            rows = leaves == lid
            hess = float((p[rows] * (1 - p[rows])).sum())
            tree.nodes[int(lid)]["value"] = float(residual[rows].sum() / max(hess, 1e-12))
        tree._compile()
        F = F + lr * tree.predict(X)
        trees.append(tree.to_payload())
        loss_path.append(_log_loss(yf, _sigmoid(F)))
    return {
        "f0": f0,
        "learning_rate": lr,
        "trees": trees,
        "train_loss_path": loss_path,
    }


def _predict_gradient_boosting(payload: dict, X: np.ndarray) -> np.ndarray:
    F = np.full(X.shape[0], payload["f0"])
    for nodes in payload["trees"]:
        F += payload["learning_rate"] * Tree.from_payload(nodes).predict(X)
    return _sigmoid(F)


_FITTERS = {
    "logistic_regression": _fit_logistic,
    "linear_svm": _fit_linear_svm,
    "knn": _fit_knn,
    "gaussian_nb": _fit_gaussian_nb,
    "random_forest": _fit_random_forest,
    "gradient_boosting": _fit_gradient_boosting,
}

_PREDICTORS = {
    "logistic_regression": _predict_logistic,
    "linear_svm": _predict_linear_svm,
    "knn": _predict_knn,
    "gaussian_nb": _predict_gaussian_nb,
    "random_forest": _predict_random_forest,
    "gradient_boosting": _predict_gradient_boosting,
}


def fit_classifier(
    family: str,
    hyperparams: dict,
    X: np.ndarray,
    y: np.ndarray,
    seed: int | None = None,
    feature_names: list[str] | None = None,
) -> FittedClassifier:
    if family not in FAMILIES:
        raise ConfigError(f"unknown classifier family: {family!r}")
    if family in STOCHASTIC_FAMILIES and seed is None:
        raise ConfigError(f"{family} requires an explicit seed")
    X, y = _check_xy(X, y)
    payload = _FITTERS[family](hyperparams, X, y, seed)
    for v in payload.values():
        if isinstance(v, float) and not np.isfinite(v):
            raise NumericError(f"non-finite parameter while fitting {family}")
    return FittedClassifier(
        family=family,
        hyperparams=dict(hyperparams),
        payload=payload,
        feature_names=list(feature_names) if feature_names is not None else None,
    )

"""From-scratch binary classifiers sharing one fit / score / predict contract.

Scores are the estimated probability of class 1 (non-fake). Supported
algorithms: ``log_reg``, ``lda``, ``gaussian_nb``, ``cart`` and ``knn``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .data import LabeledMatrix

DEFAULTS = {
    "log_reg": {"learning_rate": 0.1, "max_iter": 5000, "tol": 1e-6},
    "lda": {"ridge": 1e-6},
    "gaussian_nb": {"variance_floor": 1e-9},
    "cart": {"max_depth": 10, "min_samples_split": 2},
    "knn": {"k": 5},
}

_ALIASES = {
    "depth": "max_depth",
    "lr": "learning_rate",
    "iters": "max_iter",
    "min_split": "min_samples_split",
    "floor": "variance_floor",
}

_INT_PARAMS = {"max_iter", "max_depth", "min_samples_split", "k"}

# splits must lower count-weighted Gini by more than rounding noise
_MIN_GAIN = 1e-10


@dataclass(frozen=True)
class ClassifierSpec:
    algorithm: str
    params: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        if self.algorithm not in DEFAULTS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        unknown = set(self.params) - set(DEFAULTS[self.algorithm])
        if unknown:
            raise ValueError(f"{self.algorithm}: unknown hyperparameter(s) {sorted(unknown)}")
        return {**DEFAULTS[self.algorithm], **self.params}

    def check(self) -> dict:
        """Resolved hyperparameters; raises ValueError when out of bounds."""
        p = self.resolved()
        a = self.algorithm
        if a == "log_reg" and not (p["learning_rate"] > 0 and p["max_iter"] >= 1 and p["tol"] >= 0):
            raise ValueError("log_reg needs learning_rate > 0, max_iter >= 1, tol >= 0")
        if a == "lda" and not p["ridge"] >= 0:
            raise ValueError("lda needs ridge >= 0")
        if a == "gaussian_nb" and not p["variance_floor"] > 0:
            raise ValueError("gaussian_nb needs variance_floor > 0")
        if a == "cart" and not (p["max_depth"] >= 1 and p["min_samples_split"] >= 2):
            raise ValueError("cart needs max_depth >= 1 and min_samples_split >= 2")
        if a == "knn" and not p["k"] >= 1:
            raise ValueError("knn needs k >= 1")
        return p

    @property
    def name(self) -> str:
        if not self.params:
            return self.algorithm
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.algorithm}({inner})"

    @property
    def label(self) -> str:
        """Short display name in the style of the result tables."""
        try:
            p = self.resolved()
        except ValueError:
            return self.name
        return {
            "cart": lambda: f"DT(Dep={p['max_depth']})",
            "knn": lambda: f"k-NN(k={p['k']})",
            "log_reg": lambda: "LogReg",
            "lda": lambda: "LDA",
            "gaussian_nb": lambda: "Naive Bayes",
        }[self.algorithm]()


def parse_spec(text: str) -> ClassifierSpec:
    """Parse ``algo`` or ``algo:key=value,key=value`` (e.g. ``cart:depth=10``)."""
    algo, _, rest = text.strip().partition(":")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"bad hyperparameter {item!r} in {text!r}; expected key=value")
        key = _ALIASES.get(key.strip(), key.strip())
        try:
            params[key] = int(value) if key in _INT_PARAMS else float(value)
        except ValueError:
            raise ValueError(f"bad value for {key!r} in {text!r}") from None
    return ClassifierSpec(algo.strip(), params)


def parse_specs(text: str) -> list[ClassifierSpec]:
    """Split a list like ``cart:depth=10;knn:k=5`` or ``cart:depth=10,knn:k=5,lda``."""
    groups: list[str] = []
    for token in (t.strip() for t in text.replace(";", ",").split(",")):
        if not token:
            continue
        if groups and "=" in token and ":" not in token:
            groups[-1] += "," + token
        else:
            groups.append(token)
    return [parse_spec(g) for g in groups]


DEFAULT_SPECS = (
    ClassifierSpec("cart", {"max_depth": 10}),
    ClassifierSpec("cart", {"max_depth": 5}),
    ClassifierSpec("knn", {"k": 5}),
    ClassifierSpec("knn", {"k": 10}),
    ClassifierSpec("log_reg"),
    ClassifierSpec("lda"),
    ClassifierSpec("gaussian_nb"),
)


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Model:
    algorithm = ""
    n_features = 0

    def _check_width(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected rows of width {self.n_features}, got shape {X.shape}")
        return X

    def predict_scores(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict_labels(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_scores(X) >= threshold).astype(np.int64)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(eq=False)
class LogisticModel(Model):
    weights: np.ndarray
    bias: float
    loss_history: list = field(default_factory=list)
    algorithm = "log_reg"

    @property
    def n_features(self):
        return self.weights.shape[0]

    def predict_scores(self, X):
        X = self._check_width(X)
        return _sigmoid(X @ self.weights + self.bias)

    def to_dict(self):
        return {"algorithm": self.algorithm, "weights": self.weights.tolist(), "bias": self.bias,
                "iterations": len(self.loss_history)}


def _logistic_loss(X, y, w, b) -> float:
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def fit_logistic(X, y, learning_rate=0.1, max_iter=5000, tol=1e-6) -> LogisticModel:
    """Full-batch gradient descent on the mean log loss.

    A step that would raise the loss is rejected and the learning rate
    halved, so the recorded loss never increases.
    """
    n, d = X.shape
    w, b = np.zeros(d), 0.0
    loss = _logistic_loss(X, y, w, b)
    history = [loss]
    lr = float(learning_rate)
    for _ in range(max_iter):
        err = _sigmoid(X @ w + b) - y
        gw, gb = X.T @ err / n, float(err.mean())
        w_new, b_new = w - lr * gw, b - lr * gb
        new_loss = _logistic_loss(X, y, w_new, b_new)
        if not new_loss <= loss:
            lr /= 2.0
            if lr < 1e-300:
                break
            continue
        w, b = w_new, b_new
        delta = loss - new_loss
        loss = new_loss
        history.append(loss)
        if delta < tol:
            break
    return LogisticModel(weights=w, bias=b, loss_history=history)


@dataclass(eq=False)
class LDAModel(Model):
    means: np.ndarray
    covariance: np.ndarray
    priors: np.ndarray
    weights: np.ndarray
    bias: float
    algorithm = "lda"

    @property
    def n_features(self):
        return self.weights.shape[0]

    def predict_scores(self, X):
        X = self._check_width(X)
        return _sigmoid(X @ self.weights + self.bias)

    def to_dict(self):
        return {"algorithm": self.algorithm, "means": self.means.tolist(), "covariance": self.covariance.tolist(),
                "priors": self.priors.tolist(), "weights": self.weights.tolist(), "bias": self.bias}


def fit_lda(X, y, ridge=1e-6) -> LDAModel:
    n, d = X.shape
    means = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    centered = X - means[y]
    cov = centered.T @ centered / max(n - 2, 1)
    cov = cov + ridge * np.eye(d)
    if ridge == 0 and np.linalg.matrix_rank(cov) < d:
        raise ValueError("lda: singular pooled covariance (use ridge > 0)")
    try:
        w = np.linalg.solve(cov, means[1] - means[0])
    except np.linalg.LinAlgError:
        raise ValueError("lda: singular pooled covariance") from None
    bias = float(-0.5 * (means[0] + means[1]) @ w + np.log(priors[1] / priors[0]))
    return LDAModel(means=means, covariance=cov, priors=priors, weights=w, bias=bias)


@dataclass(eq=False)
class GaussianNBModel(Model):
    means: np.ndarray
    variances: np.ndarray
    priors: np.ndarray
    algorithm = "gaussian_nb"

    @property
    def n_features(self):
        return self.means.shape[1]

    def joint_log_likelihood(self, X):
        X = self._check_width(X)
        out = np.empty((X.shape[0], 2))
        for c in (0, 1):
            var = self.variances[c]
            out[:, c] = np.log(self.priors[c]) - 0.5 * np.sum(
                np.log(2.0 * np.pi * var) + (X - self.means[c]) ** 2 / var, axis=1
            )
        return out

    def predict_proba(self, X):
        jll = self.joint_log_likelihood(X)
        p1 = _sigmoid(jll[:, 1] - jll[:, 0])
        return np.column_stack([1.0 - p1, p1])

    def predict_scores(self, X):
        jll = self.joint_log_likelihood(X)
        return _sigmoid(jll[:, 1] - jll[:, 0])

    def to_dict(self):
        return {"algorithm": self.algorithm, "means": self.means.tolist(),
                "variances": self.variances.tolist(), "priors": self.priors.tolist()}


def fit_gaussian_nb(X, y, variance_floor=1e-9) -> GaussianNBModel:
    means = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.stack([np.maximum(X[y == c].var(axis=0), variance_floor) for c in (0, 1)])
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    return GaussianNBModel(means=means, variances=variances, priors=priors)


@dataclass(eq=False)
class TreeModel(Model):
    """Array-backed binary tree; node 0 is the root, leaves have ``left == -1``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    impurity: np.ndarray
    n_samples: np.ndarray
    class_counts: np.ndarray
    depth: np.ndarray
    n_features: int = 0
    algorithm = "cart"

    @property
    def node_count(self) -> int:
        return self.feature.shape[0]

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def leaf_distribution(self) -> np.ndarray:
        return self.class_counts / self.class_counts.sum(axis=1, keepdims=True)

    def apply(self, X) -> np.ndarray:
        X = self._check_width(X)
        return kernels.apply_tree(X, self.feature, self.threshold, self.left, self.right)

    def predict_scores(self, X):
        return self.leaf_distribution()[self.apply(X), 1]

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "n_features": self.n_features,
            "nodes": [
                {
                    "feature": int(self.feature[i]),
                    "threshold": None if self.left[i] < 0 else float(self.threshold[i]),
                    "left": int(self.left[i]),
                    "right": int(self.right[i]),
                    "impurity": float(self.impurity[i]),
                    "n_samples": int(self.n_samples[i]),
                    "class_counts": self.class_counts[i].tolist(),
                }
                for i in range(self.node_count)
            ],
        }


def gini(counts) -> float:
    n = float(sum(counts))
    return 1.0 - sum((c / n) ** 2 for c in counts) if n else 0.0


def fit_tree(X, y, max_depth=10, min_samples_split=2) -> TreeModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    feature, threshold, left, right, impurity, n_samples, counts, depths = ([] for _ in range(8))

    def new_node(idx, depth):
        c1 = int(y[idx].sum())
        c = (idx.shape[0] - c1, c1)
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        impurity.append(gini(c))
        n_samples.append(idx.shape[0])
        counts.append(c)
        depths.append(depth)
        return len(feature) - 1

    stack = [(new_node(np.arange(X.shape[0], dtype=np.int64), 0), np.arange(X.shape[0], dtype=np.int64))]
    while stack:
        node, idx = stack.pop()
        if depths[node] >= max_depth or idx.shape[0] < min_samples_split or impurity[node] == 0.0:
            continue
        f, t, gain = kernels.best_split(X, y, idx)
        if f < 0 or not gain > _MIN_GAIN:
            continue
        go_left = X[idx, f] <= t
        feature[node], threshold[node] = f, t
        li = new_node(idx[go_left], depths[node] + 1)
        ri = new_node(idx[~go_left], depths[node] + 1)
        left[node], right[node] = li, ri
        # right pushed first so the left subtree is numbered first
        stack.append((ri, idx[~go_left]))
        stack.append((li, idx[go_left]))

    return TreeModel(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        impurity=np.array(impurity, dtype=np.float64),
        n_samples=np.array(n_samples, dtype=np.int64),
        class_counts=np.array(counts, dtype=np.float64).reshape(-1, 2),
        depth=np.array(depths, dtype=np.int64),
        n_features=X.shape[1],
    )


@dataclass(eq=False)
class KNNModel(Model):
    X: np.ndarray
    y: np.ndarray
    k: int
    algorithm = "knn"

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def k_eff(self) -> int:
        return min(self.k, self.X.shape[0])

    def kneighbors(self, X) -> np.ndarray:
        X = self._check_width(X)
        return kernels.kneighbors(self.X, X, self.k_eff)

    def predict_scores(self, X, neighbors=None):
        nb = self.kneighbors(X) if neighbors is None else neighbors
        return self.y[nb].mean(axis=1)

    def predict_labels(self, X, threshold=0.5, neighbors=None):
        return (self.predict_scores(X, neighbors) >= threshold).astype(np.int64)

    def to_dict(self):
        return {"algorithm": self.algorithm, "k": self.k, "X": self.X.tolist(), "y": self.y.tolist()}


def fit_model(spec: ClassifierSpec, m: LabeledMatrix, seed: int = 0) -> Model:
    """Fit ``spec`` on ``m``.

    Every algorithm here is deterministic; ``seed`` is accepted so that
    stochastic learners can share the signature.
    """
    p = spec.check()
    X = np.ascontiguousarray(m.X, dtype=np.float64)
    y = np.ascontiguousarray(m.y, dtype=np.int64)
    if X.shape[0] < 1:
        raise ValueError("cannot fit on an empty matrix")
    both = np.unique(y).size == 2
    if spec.algorithm in ("log_reg", "lda", "gaussian_nb"):
        if X.shape[0] < 2 or not both:
            raise ValueError(f"{spec.algorithm} needs at least two rows and both classes")
    if spec.algorithm == "log_reg":
        return fit_logistic(X, y.astype(np.float64), p["learning_rate"], p["max_iter"], p["tol"])
    if spec.algorithm == "lda":
        return fit_lda(X, y, p["ridge"])
    if spec.algorithm == "gaussian_nb":
        return fit_gaussian_nb(X, y, p["variance_floor"])
    if spec.algorithm == "cart":
        return fit_tree(X, y, p["max_depth"], p["min_samples_split"])
    return KNNModel(X=X.copy(), y=y.copy(), k=p["k"])


def predict_scores(model: Model, rows) -> np.ndarray:
    return model.predict_scores(rows)


def predict_labels(model: Model, rows, threshold: float = 0.5) -> np.ndarray:
    return model.predict_labels(rows, threshold)

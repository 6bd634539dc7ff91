"""Reference learners: logistic regression, CART and a random forest."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import derive_seed, make_rng
from .errors import DimensionMismatch, EmptyData, NonFiniteLoss


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyData("X must be a non-empty 2-D matrix")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch("X and y differ in length")
    return X, y


# --------------------------------------------------------------------------
# logistic regression
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LogisticConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    training_curve: np.ndarray
    config: LogisticConfig = field(default_factory=LogisticConfig)

    def to_dict(self) -> dict:
        return {"kind": "logistic", "weights": self.weights.tolist(), "bias": self.bias,
                "training_curve": self.training_curve.tolist(), "config": asdict(self.config)}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(np.asarray(d["weights"], dtype=float), float(d["bias"]),
                   np.asarray(d.get("training_curve", []), dtype=float),
                   LogisticConfig(**d.get("config", {})))

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba_logistic(self, X)


def logistic_loss_grad(params, X, y, l2: float) -> tuple[float, np.ndarray]:
    """Mean log-loss plus ``l2/2 * ||w||^2`` and its gradient.

    ``params`` is ``[w_1 .. w_d, b]``; the bias is not penalized.
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    # log(1 + e^z) - y z, computed stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    r = sigmoid(z) - y
    grad = np.empty_like(params)
    grad[:-1] = X.T @ r / X.shape[0] + l2 * w
    grad[-1] = r.mean()
    return loss, grad


def fit_logistic(X, y, config: LogisticConfig = LogisticConfig()) -> LogisticModel:
    """Full-batch gradient descent from zero weights."""
    X, y = _check_xy(X, y)
    params = np.zeros(X.shape[1] + 1)
    curve = np.empty(config.epochs + 1)
    for epoch in range(config.epochs):
        loss, grad = logistic_loss_grad(params, X, y, config.l2)
        if not math.isfinite(loss):
            raise NonFiniteLoss(f"loss diverged at epoch {epoch}; lower the learning rate")
        curve[epoch] = loss
        params = params - config.learning_rate * grad
    loss, _ = logistic_loss_grad(params, X, y, config.l2)
    if not (math.isfinite(loss) and np.all(np.isfinite(params))):
        raise NonFiniteLoss("loss diverged; lower the learning rate")
    curve[-1] = loss
    return LogisticModel(params[:-1].copy(), float(params[-1]), curve, config)


def predict_proba_logistic(m: LogisticModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != m.weights.size:
        raise DimensionMismatch(f"expected {m.weights.size} columns")
    return sigmoid(X @ m.weights + m.bias)


# --------------------------------------------------------------------------
# CART
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 6
    min_samples_leaf: int = 5
    criterion: str = "gini"


@dataclass(frozen=True)
class TreeModel:
    """Array-encoded binary tree; ``feature == -1`` marks a leaf.

    Samples with ``x[feature] <= threshold`` go left.
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    config: TreeConfig = field(default_factory=TreeConfig)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def apply(self, X) -> np.ndarray:
        """Leaf node index reached by every row."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            nd = node[active]
            go_left = X[active, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatch("X must be 2-D")
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {"kind": "decision_tree", "feature": self.feature.tolist(),
                "threshold": self.threshold.tolist(), "left": self.left.tolist(),
                "right": self.right.tolist(), "value": self.value.tolist(),
                "n_samples": self.n_samples.tolist(), "config": asdict(self.config)}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        return cls(np.asarray(d["feature"], dtype=np.intp),
                   np.asarray(d["threshold"], dtype=float),
                   np.asarray(d["left"], dtype=np.intp), np.asarray(d["right"], dtype=np.intp),
                   np.asarray(d["value"], dtype=float), np.asarray(d["n_samples"], dtype=np.intp),
                   TreeConfig(**d.get("config", {})))


def gini(p):
    return 2.0 * p * (1.0 - p)


def best_gini_split(x: np.ndarray, y: np.ndarray, min_samples_leaf: int = 1):
    """Best threshold on one feature: ``(impurity_decrease, threshold)`` or None.

    Candidates are midpoints between consecutive distinct sorted values;
    the lowest threshold wins ties.
    """
    n = x.size
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    pos_left = np.cumsum(ys)[:-1]
    n_left = np.arange(1, n)
    valid = xs[1:] > xs[:-1]
    valid &= (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf)
    if not valid.any():
        return None
    total_pos = ys.sum()
    p_l = pos_left / n_left
    p_r = (total_pos - pos_left) / (n - n_left)
    child = (n_left * gini(p_l) + (n - n_left) * gini(p_r)) / n
    decrease = gini(total_pos / n) - child
    decrease = np.where(valid, decrease, -np.inf)
    i = int(np.argmax(decrease))
    return float(decrease[i]), 0.5 * (xs[i] + xs[i + 1])


class _TreeBuilder:
    def __init__(self, X, y, config: TreeConfig, max_features: int | None = None, rng=None):
        self.X, self.y, self.cfg = X, y, config
        self.max_features = max_features
        self.rng = rng
        self.feature, self.threshold, self.left, self.right = [], [], [], []
        self.value, self.n_samples = [], []

    def _new_node(self, rows) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(self.y[rows].mean()))
        self.n_samples.append(rows.size)
        return len(self.feature) - 1

    def _candidate_features(self) -> np.ndarray:
        d = self.X.shape[1]
        if self.max_features is None or self.max_features >= d:
            return np.arange(d)
        return np.sort(self.rng.choice(d, size=self.max_features, replace=False))

    def build(self) -> TreeModel:
        root_rows = np.arange(self.X.shape[0])
        stack = [(self._new_node(root_rows), root_rows, 0)]
        while stack:
            node, rows, depth = stack.pop()
            yr = self.y[rows]
            if depth >= self.cfg.max_depth or yr.min() == yr.max() \
                    or rows.size < 2 * self.cfg.min_samples_leaf:
                continue
            best = None
            for j in self._candidate_features():
                res = best_gini_split(self.X[rows, j], yr, self.cfg.min_samples_leaf)
                if res is not None and (best is None or res[0] > best[0]):
                    best = (res[0], j, res[1])
            if best is None:
                continue
            _, j, thr = best
            mask = self.X[rows, j] <= thr
            lrows, rrows = rows[mask], rows[~mask]
            self.feature[node], self.threshold[node] = int(j), float(thr)
            self.left[node] = self._new_node(lrows)
            self.right[node] = self._new_node(rrows)
            # right pushed first so the left subtree is numbered first
            stack.append((self.right[node], rrows, depth + 1))
            stack.append((self.left[node], lrows, depth + 1))
        return TreeModel(np.array(self.feature, dtype=np.intp), np.array(self.threshold),
                         np.array(self.left, dtype=np.intp), np.array(self.right, dtype=np.intp),
                         np.array(self.value), np.array(self.n_samples, dtype=np.intp), self.cfg)


def fit_tree(X, y, config: TreeConfig = TreeConfig()) -> TreeModel:
    """Greedy CART on Gini impurity decrease.

    Every midpoint between distinct sorted values of every feature is tried;
    ties go to the lowest feature index, then the lowest threshold. A node
    becomes a leaf at ``max_depth``, when pure, or when no threshold gives
    both children ``min_samples_leaf`` rows. A zero-decrease split is still
    taken (XOR needs one at the root).
    """
    if config.criterion != "gini":
        raise ValueError("only the gini criterion is supported")
    X, y = _check_xy(X, y)
    return _TreeBuilder(X, y, config).build()


# --------------------------------------------------------------------------
# random forest
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 6
    min_samples_leaf: int = 5
    feature_subsample_fraction: float | None = None  # None -> sqrt(d) / d
    bootstrap: bool = True
    seed: int = 0


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeModel, ...]
    tree_seeds: tuple[int, ...]
    config: ForestConfig = field(default_factory=ForestConfig)

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.mean([t.predict_proba(X) for t in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {"kind": "random_forest", "trees": [t.to_dict() for t in self.trees],
                "tree_seeds": [str(s) for s in self.tree_seeds], "config": asdict(self.config)}

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(tuple(TreeModel.from_dict(t) for t in d["trees"]),
                   tuple(int(s) for s in d["tree_seeds"]), ForestConfig(**d.get("config", {})))


def forest_max_features(d: int, fraction: float | None) -> int:
    frac = math.sqrt(d) / d if fraction is None else fraction
    return min(d, max(1, int(round(frac * d))))


def fit_forest(X, y, config: ForestConfig = ForestConfig()) -> ForestModel:
    """Bagged CART trees with per-split feature subsampling.

    Tree ``i`` draws its bootstrap rows and feature subsets from
    ``derive_seed(config.seed, i)``, so trees are independent of one another
    and of the order they are trained in.
    """
    X, y = _check_xy(X, y)
    n, d = X.shape
    m = forest_max_features(d, config.feature_subsample_fraction)
    tcfg = TreeConfig(config.max_depth, config.min_samples_leaf)
    trees, seeds = [], []
    for i in range(config.n_trees):
        s = derive_seed(config.seed, i)
        rng = make_rng(s)
        rows = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        trees.append(_TreeBuilder(X[rows], y[rows], tcfg, m, rng).build())
        seeds.append(s)
    return ForestModel(tuple(trees), tuple(seeds), config)

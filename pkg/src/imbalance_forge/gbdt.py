"""Histogram gradient-boosted trees for binary log-loss.

One engine covers both boosters' mechanics:

* second-order (Newton) split gain and leaf weights with L2 penalty
  ``lambda_reg`` and per-leaf penalty ``gamma``;
* features pre-binned into at most ``max_bins`` quantile bins, split search
  by scanning per-bin gradient/hessian sums, sibling histograms by
  parent-minus-child subtraction;
* leaf-wise growth: the frontier leaf with the largest gain is split next;
* optional gradient-based one-side sampling (GOSS) of rows per round.

``GbdtConfig.xgboost_like()`` and ``GbdtConfig.lightgbm_like()`` are the two
presets used by the experiment harness.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import sigmoid
from .data import derive_seed, make_rng
from .errors import DimensionMismatch, EmptyData, InvalidRates

_P_CLIP = 1e-6


@dataclass(frozen=True)
class GossConfig:
    a: float = 0.2
    b: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.a < 1.0 and 0.0 < self.b < 1.0 and self.a + self.b <= 1.0 + 1e-12):
            raise InvalidRates(f"GOSS needs 0 < a, b < 1 and a + b <= 1 (got a={self.a}, b={self.b})")


@dataclass(frozen=True)
class GbdtConfig:
    n_rounds: int = 200
    learning_rate: float = 0.1
    max_leaves: int = 31
    max_bins: int = 255
    lambda_reg: float = 1.0
    gamma: float = 0.0
    min_child_hessian: float = 1e-3
    goss: GossConfig | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.max_leaves < 2:
            raise ValueError("max_leaves must be >= 2")
        if not 2 <= self.max_bins <= 255:
            raise ValueError("max_bins must lie in [2, 255]")
        if self.lambda_reg < 0 or self.gamma < 0 or self.min_child_hessian < 0:
            raise ValueError("lambda_reg, gamma and min_child_hessian must be >= 0")
        if isinstance(self.goss, dict):
            object.__setattr__(self, "goss", GossConfig(**self.goss))

    @classmethod
    def xgboost_like(cls, **overrides) -> "GbdtConfig":
        return cls(**{"goss": None, **overrides})

    @classmethod
    def lightgbm_like(cls, **overrides) -> "GbdtConfig":
        return cls(**{"goss": GossConfig(0.2, 0.1), **overrides})


# --------------------------------------------------------------------------
# loss derivatives and Newton quantities
# --------------------------------------------------------------------------

def logistic_grad_hess(y, score) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivative of log-loss w.r.t. the raw score."""
    p = sigmoid(np.asarray(score, dtype=float))
    y = np.asarray(y, dtype=float)
    return p - y, p * (1.0 - p)


def log_loss(y, score) -> float:
    y = np.asarray(y, dtype=float)
    z = np.asarray(score, dtype=float)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def split_gain(G_L, H_L, G_R, H_R, lam: float, gamma: float):
    """Loss reduction of splitting a node into (L, R), minus ``gamma``."""
    G = G_L + G_R
    H = H_L + H_R
    return 0.5 * (G_L * G_L / (H_L + lam) + G_R * G_R / (H_R + lam) - G * G / (H + lam)) - gamma


def leaf_weight(G, H, lam: float):
    return -G / (H + lam)


# --------------------------------------------------------------------------
# binning
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BinMapper:
    """Per-feature ascending cut points; ``bin(x) = #{edges < x}``.

    So ``bin(x) <= b`` holds exactly when ``x <= edges[b]``.
    """
    edges: tuple[np.ndarray, ...]

    @property
    def n_features(self) -> int:
        return len(self.edges)

    @property
    def n_bins(self) -> np.ndarray:
        return np.array([e.size + 1 for e in self.edges], dtype=np.intp)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} columns")
        out = np.empty(X.shape, dtype=np.uint8)
        for j, e in enumerate(self.edges):
            out[:, j] = np.searchsorted(e, X[:, j], side="left")
        return out


def _feature_edges(v: np.ndarray, max_bins: int) -> np.ndarray:
    distinct = np.unique(v)
    if distinct.size <= max_bins:
        return 0.5 * (distinct[:-1] + distinct[1:])
    qs = np.quantile(v, np.arange(1, max_bins) / max_bins)
    edges = np.unique(qs)
    return edges[edges < distinct[-1]]


def build_bins(X, max_bins: int = 255) -> BinMapper:
    """Quantile bin edges per feature.

    A feature with at most ``max_bins`` distinct values gets one bin per
    value (edges at the midpoints), which makes histogram split search
    equivalent to exact search on it.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("X must be 2-D")
    if not np.all(np.isfinite(X)):
        raise ValueError("X must be finite")
    return BinMapper(tuple(_feature_edges(X[:, j], max_bins) for j in range(X.shape[1])))


# --------------------------------------------------------------------------
# histograms
# --------------------------------------------------------------------------

@dataclass
class Histogram:
    """Per (feature, bin) sums; arrays of shape ``(n_features, width)``."""
    sum_grad: np.ndarray
    sum_hess: np.ndarray
    count: np.ndarray

    def __sub__(self, other: "Histogram") -> "Histogram":
        cnt = self.count - other.count
        empty = cnt == 0
        g = np.where(empty, 0.0, self.sum_grad - other.sum_grad)
        h = np.where(empty, 0.0, self.sum_hess - other.sum_hess)
        return Histogram(g, h, cnt)

    def __add__(self, other: "Histogram") -> "Histogram":
        return Histogram(self.sum_grad + other.sum_grad, self.sum_hess + other.sum_hess,
                         self.count + other.count)


def build_histogram(binned: np.ndarray, rows: np.ndarray, g: np.ndarray, h: np.ndarray,
                    width: int) -> Histogram:
    """Accumulate ``g``/``h`` (aligned with ``rows``) into per-feature bins.

    Features are accumulated in column order, so the result does not depend
    on how the work could be partitioned.
    """
    d = binned.shape[1]
    flat = binned[rows].astype(np.intp) + np.arange(d) * width
    flat = flat.ravel()
    size = d * width
    gw = np.broadcast_to(g[:, None], (rows.size, d)).ravel()
    hw = np.broadcast_to(h[:, None], (rows.size, d)).ravel()
    sg = np.bincount(flat, weights=gw, minlength=size).reshape(d, width)
    sh = np.bincount(flat, weights=hw, minlength=size).reshape(d, width)
    cnt = np.bincount(flat, minlength=size).reshape(d, width)
    return Histogram(sg, sh, cnt)


@dataclass(frozen=True)
class SplitInfo:
    gain: float
    feature: int
    bin: int
    G_left: float
    H_left: float
    G_right: float
    H_right: float


def best_split(hist: Histogram, n_bins: np.ndarray, lam: float, gamma: float,
               min_child_hessian: float) -> SplitInfo | None:
    """Highest-gain ``(feature, bin)`` cut of a node histogram.

    Rows with ``bin <= b`` go left. Ties resolve to the lowest feature, then
    the lowest bin. Returns None when no cut leaves both children non-empty
    with hessian at least ``min_child_hessian``.
    """
    GL = np.cumsum(hist.sum_grad, axis=1)[:, :-1]
    HL = np.cumsum(hist.sum_hess, axis=1)[:, :-1]
    CL = np.cumsum(hist.count, axis=1)[:, :-1]
    G = hist.sum_grad.sum(axis=1)[:, None]
    H = hist.sum_hess.sum(axis=1)[:, None]
    C = hist.count.sum(axis=1)[:, None]
    GR, HR, CR = G - GL, H - HL, C - CL
    width = hist.count.shape[1]
    valid = np.arange(width - 1)[None, :] < (n_bins[:, None] - 1)
    valid &= (CL > 0) & (CR > 0) & (HL >= min_child_hessian) & (HR >= min_child_hessian)
    if not valid.any():
        return None
    gain = np.where(valid, split_gain(GL, HL, GR, HR, lam, gamma), -np.inf)
    k = int(np.argmax(gain))
    f, b = divmod(k, width - 1)
    return SplitInfo(float(gain[f, b]), f, b, float(GL[f, b]), float(HL[f, b]),
                     float(GR[f, b]), float(HR[f, b]))


# --------------------------------------------------------------------------
# GOSS
# --------------------------------------------------------------------------

def goss_sample(g, a: float, b: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Gradient-based one-side sampling.

    Keeps the ``ceil(a*n)`` rows with the largest ``|g|`` (ties by row index)
    at weight 1 and ``ceil(b*n)`` of the rest, drawn uniformly without
    replacement, at weight ``(1 - a) / b``. Returns ascending row indices and
    the matching weights.
    """
    g = np.asarray(g, dtype=float)
    n = g.size
    if not (0.0 < a < 1.0 and 0.0 < b < 1.0 and a + b <= 1.0 + 1e-12):
        raise InvalidRates(f"GOSS needs 0 < a, b < 1 and a + b <= 1 (got a={a}, b={b})")
    if a * n < 1.0 - 1e-9:
        raise InvalidRates(f"a * n = {a * n} must be at least 1")
    n_top = math.ceil(a * n - 1e-9)
    order = np.argsort(-np.abs(g), kind="stable")
    top, rest = order[:n_top], order[n_top:]
    n_rand = min(math.ceil(b * n - 1e-9), rest.size)
    picked = make_rng(seed).choice(rest, size=n_rand, replace=False) if n_rand else rest[:0]
    rows = np.concatenate([top, picked])
    w = np.concatenate([np.ones(n_top), np.full(n_rand, (1.0 - a) / b)])
    srt = np.argsort(rows, kind="stable")
    return rows[srt], w[srt]


# --------------------------------------------------------------------------
# trees
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RegressionTree:
    """Array-encoded tree; ``feature == -1`` marks a leaf holding ``value``.

    Internal nodes send ``bin <= bin_threshold`` (equivalently
    ``x <= threshold``) to ``left``.
    """
    feature: np.ndarray
    bin_threshold: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def _route(self, cols: np.ndarray, thr: np.ndarray) -> np.ndarray:
        node = np.zeros(cols.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            nd = node[active]
            go_left = cols[active, self.feature[nd]] <= thr[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] >= 0]
        return node

    def leaf_index_binned(self, binned: np.ndarray) -> np.ndarray:
        return self._route(binned, self.bin_threshold)

    def leaf_index(self, X: np.ndarray) -> np.ndarray:
        return self._route(X, self.threshold)

    def predict(self, X) -> np.ndarray:
        return self.value[self.leaf_index(np.asarray(X, dtype=float))]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in
                ("feature", "bin_threshold", "threshold", "left", "right", "value", "gain")}

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        ints = ("feature", "bin_threshold", "left", "right")
        return cls(**{k: np.asarray(v, dtype=np.intp if k in ints else float)
                      for k, v in d.items()})


@dataclass
class _Leaf:
    node: int
    order: int
    rows: np.ndarray
    hist: Histogram
    G: float
    H: float
    split: SplitInfo | None


def grow_tree_leafwise(binned: np.ndarray, g: np.ndarray, h: np.ndarray, cfg: GbdtConfig,
                       rows: np.ndarray | None = None, mapper: BinMapper | None = None,
                       n_bins: np.ndarray | None = None) -> RegressionTree:
    """One tree grown best-first over the leaf frontier.

    ``g`` and ``h`` are aligned with ``rows`` (all rows when omitted) and
    already carry any sampling weights. The leaf with the highest positive
    gain is split next (ties go to the oldest leaf) until ``max_leaves``
    leaves exist or no admissible split remains. Leaf values are the
    unshrunk Newton weights ``-G / (H + lambda_reg)``.
    """
    if rows is None:
        rows = np.arange(binned.shape[0])
    if n_bins is None:
        n_bins = mapper.n_bins if mapper is not None else binned.max(axis=0).astype(np.intp) + 1
    width = int(n_bins.max())
    lam, gam, mch = cfg.lambda_reg, cfg.gamma, cfg.min_child_hessian
    # local positions into g/h for each row id in ``rows``
    pos = np.arange(rows.size)

    feature, bin_thr, left, right, value, gains = [-1], [0], [-1], [-1], [0.0], [0.0]
    root = build_histogram(binned, rows, g, h, width)
    G0, H0 = float(g.sum()), float(h.sum())
    frontier = [_Leaf(0, 0, pos, root, G0, H0, best_split(root, n_bins, lam, gam, mch))]
    n_made = 1

    while len(frontier) < cfg.max_leaves:
        pick = None
        for i, leaf in enumerate(frontier):
            if leaf.split is None or not leaf.split.gain > 0:
                continue
            if pick is None or leaf.split.gain > frontier[pick].split.gain:
                pick = i
        if pick is None:
            break
        leaf = frontier.pop(pick)
        s = leaf.split
        go_left = binned[rows[leaf.rows], s.feature] <= s.bin
        lpos, rpos = leaf.rows[go_left], leaf.rows[~go_left]
        small, large = (lpos, rpos) if lpos.size <= rpos.size else (rpos, lpos)
        h_small = build_histogram(binned, rows[small], g[small], h[small], width)
        h_large = leaf.hist - h_small
        h_left, h_right = (h_small, h_large) if small is lpos else (h_large, h_small)

        feature[leaf.node], bin_thr[leaf.node], gains[leaf.node] = s.feature, s.bin, s.gain
        children = []
        for cpos, chist, cG, cH in ((lpos, h_left, s.G_left, s.H_left),
                                    (rpos, h_right, s.G_right, s.H_right)):
            feature.append(-1)
            bin_thr.append(0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            gains.append(0.0)
            node = len(feature) - 1
            children.append(node)
            frontier.append(_Leaf(node, n_made, cpos, chist, cG, cH,
                                  best_split(chist, n_bins, lam, gam, mch)))
            n_made += 1
        left[leaf.node], right[leaf.node] = children
        # keep the frontier in creation order so ties resolve to the oldest leaf
        frontier.sort(key=lambda lf: lf.order)

    for leaf in frontier:
        value[leaf.node] = leaf_weight(leaf.G, leaf.H, lam)

    feature = np.asarray(feature, dtype=np.intp)
    bin_thr = np.asarray(bin_thr, dtype=np.intp)
    thr = np.zeros(feature.size)
    if mapper is not None:
        for i in np.flatnonzero(feature >= 0):
            thr[i] = mapper.edges[feature[i]][bin_thr[i]]
    return RegressionTree(feature, bin_thr, thr, np.asarray(left, dtype=np.intp),
                          np.asarray(right, dtype=np.intp), np.asarray(value), np.asarray(gains))


# --------------------------------------------------------------------------
# boosting
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GbdtModel:
    base_score: float
    trees: tuple[RegressionTree, ...]
    learning_rate: float
    mapper: BinMapper
    config: GbdtConfig = field(default_factory=GbdtConfig)

    def raw_score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.mapper.n_features:
            raise DimensionMismatch(f"expected {self.mapper.n_features} columns")
        score = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            score += self.learning_rate * t.predict(X)
        return score

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.raw_score(X))

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        return {"kind": "gbdt", "format": "imbalance-forge/gbdt/1",
                "base_score": self.base_score, "learning_rate": self.learning_rate,
                "bin_edges": [e.tolist() for e in self.mapper.edges],
                "trees": [t.to_dict() for t in self.trees], "config": cfg}

    @classmethod
    def from_dict(cls, d: dict) -> "GbdtModel":
        cfg = dict(d.get("config", {}))
        cfg["seed"] = int(cfg.get("seed", 0))
        return cls(float(d["base_score"]), tuple(RegressionTree.from_dict(t) for t in d["trees"]),
                   float(d["learning_rate"]),
                   BinMapper(tuple(np.asarray(e, dtype=float) for e in d["bin_edges"])),
                   GbdtConfig(**cfg))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))


def base_score_for(y) -> float:
    p = float(np.clip(np.mean(y), _P_CLIP, 1.0 - _P_CLIP))
    return math.log(p / (1.0 - p))


def fit(X, y, cfg: GbdtConfig = GbdtConfig(), callback=None) -> GbdtModel:
    """Boost ``cfg.n_rounds`` trees on log-loss.

    Round ``r`` samples rows (when GOSS is on) with
    ``derive_seed(cfg.seed, r)``. ``callback(round, scores)`` if given is
    called after every round with the training raw scores.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyData("X must be a non-empty 2-D matrix")
    if X.shape[0] != y.size:
        raise DimensionMismatch("X and y differ in length")
    mapper = build_bins(X, cfg.max_bins)
    binned = mapper.transform(X)
    n_bins = mapper.n_bins
    base = base_score_for(y)
    score = np.full(y.size, base)
    trees = []
    for r in range(cfg.n_rounds):
        g, h = logistic_grad_hess(y, score)
        if cfg.goss is not None:
            rows, w = goss_sample(g, cfg.goss.a, cfg.goss.b, derive_seed(cfg.seed, r))
            gs, hs = g[rows] * w, h[rows] * w
        else:
            rows, gs, hs = np.arange(y.size), g, h
        tree = grow_tree_leafwise(binned, gs, hs, cfg, rows, mapper, n_bins)
        score = score + cfg.learning_rate * tree.value[tree.leaf_index_binned(binned)]
        trees.append(tree)
        if callback is not None:
            callback(r, score)
    return GbdtModel(base, tuple(trees), cfg.learning_rate, mapper, cfg)


def predict_proba(m: GbdtModel, X) -> np.ndarray:
    return m.predict_proba(X)

"""Exact k-NN and the resamplers: random undersampling, SMOTE, ENN, SMOTEENN.

Neighbors are found by brute force on Euclidean distance with ties broken
toward the lower row index, so every resampler is reproducible given the
same input order and seed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, derive_seed, make_rng, minority_label
from .errors import DatasetTooSmall, KTooLarge, MinorityTooSmall, SingleClassInput

logger = logging.getLogger(__name__)

# rows*refs*dims budget for one block of the distance computation
_BLOCK_ELEMS = 1 << 22


# --------------------------------------------------------------------------
# nearest neighbors
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NeighborQuery:
    k: int
    metric: str = "euclidean"
    exclude_self: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.metric != "euclidean":
            raise ValueError("only the euclidean metric is supported")


def _check_k(n_ref: int, k: int, exclude_self: bool) -> None:
    if n_ref == 0:
        raise ValueError("reference set is empty")
    limit = n_ref - 1 if exclude_self else n_ref
    if k > limit:
        raise KTooLarge(f"k={k} but only {limit} candidate neighbors")


def _smallest_k(D: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the k smallest entries per row of ``D``, ties by index."""
    n = D.shape[1]
    if k == n:
        return np.argsort(D, axis=1, kind="stable")
    part = np.argpartition(D, k - 1, axis=1)[:, :k]
    vals = np.take_along_axis(D, part, axis=1)
    kth = vals.max(axis=1)
    # rows where the k-th distance is shared with an index outside the partition
    ambiguous = np.flatnonzero((D <= kth[:, None]).sum(axis=1) > k)
    order = np.lexsort((part, vals), axis=1)
    out = np.take_along_axis(part, order, axis=1)
    for r in ambiguous:
        out[r] = np.argsort(D[r], kind="stable")[:k]
    return out


def _distances(queries: np.ndarray, reference: np.ndarray) -> np.ndarray:
    diff = queries[:, None, :] - reference[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def knn(reference, query, q: NeighborQuery | int, exclude_index: int | None = None) -> np.ndarray:
    """Indices of the ``k`` reference rows nearest to ``query``.

    When ``q.exclude_self`` is set, ``exclude_index`` names the reference row
    that is the query itself; it is never returned.
    """
    if isinstance(q, int):
        q = NeighborQuery(q, exclude_self=exclude_index is not None)
    ref = np.asarray(reference, dtype=float)
    x = np.asarray(query, dtype=float).reshape(1, -1)
    if ref.ndim != 2 or ref.shape[1] != x.shape[1]:
        raise ValueError("query dimension does not match reference")
    _check_k(ref.shape[0], q.k, q.exclude_self)
    d = _distances(x, ref)
    if q.exclude_self:
        if exclude_index is None:
            raise ValueError("exclude_self needs the query's row index")
        d[0, exclude_index] = np.inf
    return _smallest_k(d, q.k)[0]


def neighbor_table(points, k: int, reference=None) -> np.ndarray:
    """k nearest neighbors for every row.

    With ``reference`` omitted, neighbors of each row of ``points`` are
    searched among the other rows of ``points`` (self excluded). Otherwise
    each row of ``points`` is a query against ``reference`` with nothing
    excluded.
    """
    P = np.asarray(points, dtype=float)
    self_search = reference is None
    R = P if self_search else np.asarray(reference, dtype=float)
    _check_k(R.shape[0], k, self_search)
    n, dim = P.shape[0], max(P.shape[1], 1)
    block = max(1, _BLOCK_ELEMS // (R.shape[0] * dim))
    out = np.empty((n, k), dtype=np.intp)
    for start in range(0, n, block):
        stop = min(n, start + block)
        D = _distances(P[start:stop], R)
        if self_search:
            D[np.arange(stop - start), np.arange(start, stop)] = np.inf
        out[start:stop] = _smallest_k(D, k)
    return out


# --------------------------------------------------------------------------
# random undersampling
# --------------------------------------------------------------------------

def random_undersample(ds: Dataset, seed: int) -> Dataset:
    """Drop majority rows at random (without replacement) down to the minority count.

    Minority rows are kept verbatim; the selection preserves row order.
    """
    n1 = int(np.sum(ds.labels == 1))
    n0 = ds.n_rows - n1
    if n0 == 0 or n1 == 0:
        raise SingleClassInput("random undersampling needs both classes")
    maj = 1 if n1 > n0 else 0
    maj_idx = np.flatnonzero(ds.labels == maj)
    min_idx = np.flatnonzero(ds.labels != maj)
    keep = make_rng(seed).choice(maj_idx, size=min_idx.size, replace=False)
    rows = np.sort(np.concatenate([min_idx, keep]))
    return ds.take(rows, {"op": "random_undersample", "seed": int(seed),
                          "removed": int(maj_idx.size - keep.size)})


def undersample_ensemble(ds: Dataset, n_rounds: int, seed: int) -> list[Dataset]:
    """``n_rounds`` independent undersamples; round ``i`` uses ``derive_seed(seed, i)``."""
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    return [random_undersample(ds, derive_seed(seed, i)) for i in range(n_rounds)]


# --------------------------------------------------------------------------
# SMOTE
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoteConfig:
    k: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ValueError("target_ratio must lie in (0, 1]")


@dataclass(frozen=True)
class SmoteSamples:
    """Synthetic rows with their provenance (indices into the minority block)."""
    rows: np.ndarray
    base: np.ndarray
    neighbor: np.ndarray
    lam: np.ndarray


def n_synthetic(n_majority: int, n_minority: int, target_ratio: float) -> int:
    """Rows SMOTE must add for ``minority / majority >= target_ratio``."""
    need = int(np.ceil(target_ratio * n_majority - 1e-9)) - n_minority
    return max(need, 0)


def smote_samples(minority, n_new: int, k: int, rng: np.random.Generator) -> SmoteSamples:
    """Interpolate ``n_new`` points ``x + lam * (y - x)`` inside ``minority``.

    Base points ``x`` cycle through the minority rows in order; ``y`` is one
    of the ``k`` minority neighbors of ``x`` chosen uniformly, and ``lam`` is
    drawn from U(0, 1) per synthesis.
    """
    M = np.asarray(minority, dtype=float)
    if M.shape[0] <= k:
        raise MinorityTooSmall(f"{M.shape[0]} minority rows; SMOTE with k={k} needs more than k")
    if n_new == 0:
        empty = np.empty(0, dtype=np.intp)
        return SmoteSamples(np.empty((0, M.shape[1])), empty, empty, np.empty(0))
    nbrs = neighbor_table(M, k)
    base = np.arange(n_new) % M.shape[0]
    pick = rng.integers(0, k, size=n_new)
    lam = rng.random(n_new)
    other = nbrs[base, pick]
    rows = M[base] + lam[:, None] * (M[other] - M[base])
    return SmoteSamples(rows, base, other, lam)


def smote(ds: Dataset, cfg: SmoteConfig = SmoteConfig()) -> Dataset:
    """Append synthetic minority rows until ``minority / majority >= target_ratio``."""
    lab = minority_label(ds)
    min_idx = np.flatnonzero(ds.labels == lab)
    n_min = min_idx.size
    n_maj = ds.n_rows - n_min
    if n_min <= cfg.k:
        raise MinorityTooSmall(f"{n_min} minority rows; SMOTE with k={cfg.k} needs more than k")
    n_new = n_synthetic(n_maj, n_min, cfg.target_ratio)
    s = smote_samples(ds.features[min_idx], n_new, cfg.k, make_rng(cfg.seed))
    return ds.append_rows(s.rows, np.full(n_new, lab), {
        "op": "smote", "k": cfg.k, "target_ratio": cfg.target_ratio,
        "seed": int(cfg.seed), "added": int(n_new)})


# --------------------------------------------------------------------------
# ENN
# --------------------------------------------------------------------------

def enn_keep_mask(X, y, k: int = 3, only_label: int | None = None) -> np.ndarray:
    """Retention mask of one simultaneous ENN pass.

    A row survives iff a strict majority (more than ``k / 2``) of its ``k``
    nearest other rows share its label. With ``only_label`` set, rows of
    other labels are never removed.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.shape[0] <= k:
        raise DatasetTooSmall(f"{X.shape[0]} rows; ENN with k={k} needs more than k")
    nbrs = neighbor_table(X, k)
    agree = (y[nbrs] == y[:, None]).sum(axis=1)
    keep = 2 * agree > k
    if only_label is not None:
        keep |= y != only_label
    return keep


def enn(ds: Dataset, k: int = 3, majority_only: bool = False) -> Dataset:
    """Edited nearest neighbors over all rows (or the majority class only)."""
    only = None
    if majority_only:
        only = 1 - minority_label(ds)
    keep = enn_keep_mask(ds.features, ds.labels, k, only)
    return ds.take(np.flatnonzero(keep), {"op": "enn", "k": k, "majority_only": majority_only,
                                          "removed": int((~keep).sum())})


# --------------------------------------------------------------------------
# SMOTEENN
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoteennConfig:
    smote: SmoteConfig = field(default_factory=SmoteConfig)
    enn_k: int = 3
    max_iterations: int = 1
    balance_tolerance: float = 0.05
    enn_majority_only: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.balance_tolerance < 0:
            raise ValueError("balance_tolerance must be >= 0")


def balance_ratio(ds: Dataset) -> float:
    """Label-1 count over label-0 count."""
    n1 = int(np.sum(ds.labels == 1))
    n0 = ds.n_rows - n1
    return np.inf if n0 == 0 else n1 / n0


def smoteenn(ds: Dataset, cfg: SmoteennConfig = SmoteennConfig()) -> Dataset:
    """Alternate SMOTE and ENN passes.

    Stops after ``max_iterations`` passes, once the class ratio is within
    ``balance_tolerance`` of 1, or after a pass that neither adds nor removes
    a row. Pass ``i`` seeds SMOTE with ``derive_seed(cfg.smote.seed, i)``.
    """
    out = ds
    for it in range(cfg.max_iterations):
        sc = SmoteConfig(cfg.smote.k, cfg.smote.target_ratio, derive_seed(cfg.smote.seed, it))
        before = out.n_rows
        over = smote(out, sc)
        added = over.n_rows - before
        out = enn(over, cfg.enn_k, cfg.enn_majority_only)
        removed = over.n_rows - out.n_rows
        ratio = balance_ratio(out)
        out = out.logged({"op": "smoteenn_pass", "iteration": it, "added": added,
                          "removed": removed, "ratio": ratio})
        logger.debug("smoteenn pass %d: +%d -%d ratio %.4f", it, added, removed, ratio)
        if abs(ratio - 1.0) <= cfg.balance_tolerance or (added == 0 and removed == 0):
            break
    return out

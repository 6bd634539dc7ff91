"""Weight-of-Evidence binning and Information Value feature ranking.

"Good" is label 0 and "bad" is label 1. A sample value ``v`` falls in the
first bin whose upper edge satisfies ``v <= edge``; values above the last
edge land in the final bin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import SingleClassInput, TooFewDistinctValues


@dataclass(frozen=True)
class BinningSpec:
    feature_index: int
    edges: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.edges) + 1

    def assign(self, values) -> np.ndarray:
        return np.searchsorted(self.edges, np.asarray(values, dtype=float), side="left")


@dataclass(frozen=True)
class WoeTable:
    good_count: np.ndarray
    bad_count: np.ndarray
    dist_good: np.ndarray
    dist_bad: np.ndarray
    woe: np.ndarray
    iv: float


def quantile_bins(values, n_bins: int = 10, feature_index: int = 0) -> BinningSpec:
    """Cut points at the empirical quantiles ``i / n_bins``.

    Quantiles use linear interpolation between order statistics (NumPy's
    default rule). Duplicate cut points, and cut points at or above the
    maximum, are collapsed so no bin is structurally empty.
    """
    v = np.asarray(values, dtype=float)
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    if v.size == 0:
        raise ValueError("values must be non-empty")
    distinct = np.unique(v)
    if distinct.size < 2:
        raise TooFewDistinctValues("need at least 2 distinct values to bin")
    qs = np.quantile(v, np.arange(1, n_bins) / n_bins)
    edges = np.unique(qs)
    edges = edges[edges < distinct[-1]]
    if edges.size == 0:
        edges = distinct[-2:-1]
    return BinningSpec(feature_index, edges)


def woe_iv(binned, labels, smoothing: float = 0.5, n_bins: int | None = None) -> WoeTable:
    """WoE per bin and the aggregate IV.

    ``smoothing`` is added to every (bin, class) count before the class
    distributions are formed. With ``smoothing == 0`` bins that are empty in
    both classes are skipped, and a bin empty in one class yields an
    infinite WoE and IV.
    """
    b = np.asarray(binned, dtype=np.intp)
    y = np.asarray(labels)
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    if b.shape != y.shape:
        raise ValueError("binned and labels differ in length")
    if not (np.any(y == 0) and np.any(y == 1)):
        raise SingleClassInput("both classes must be present")
    nb = int(b.max()) + 1 if n_bins is None else int(n_bins)
    if b.min() < 0 or b.max() >= nb:
        raise ValueError("bin index out of range")
    good = np.bincount(b[y == 0], minlength=nb).astype(float)
    bad = np.bincount(b[y == 1], minlength=nb).astype(float)
    if smoothing == 0:
        keep = (good + bad) > 0
        good, bad = good[keep], bad[keep]
    g = good + smoothing
    d = bad + smoothing
    dist_good = g / g.sum()
    dist_bad = d / d.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        woe = np.log(dist_good / dist_bad)
        terms = (dist_good - dist_bad) * woe
    terms = np.where(dist_good == dist_bad, 0.0, terms)
    return WoeTable(good, bad, dist_good, dist_bad, woe, float(terms.sum()))


def feature_iv(values, labels, n_bins: int = 10, smoothing: float = 0.5) -> float:
    """IV of one feature column; a constant column scores 0."""
    try:
        spec = quantile_bins(values, n_bins)
    except TooFewDistinctValues:
        if not (np.any(np.asarray(labels) == 0) and np.any(np.asarray(labels) == 1)):
            raise SingleClassInput("both classes must be present") from None
        return 0.0
    return woe_iv(spec.assign(values), labels, smoothing, spec.n_bins).iv


def rank_features(ds: Dataset, n_bins: int = 10, smoothing: float = 0.5) -> list[tuple[str, float]]:
    """Features ordered by descending IV, ties by column index."""
    ivs = [feature_iv(ds.features[:, j], ds.labels, n_bins, smoothing)
           for j in range(ds.n_features)]
    order = sorted(range(ds.n_features), key=lambda j: (-ivs[j], j))
    return [(ds.feature_names[j], ivs[j]) for j in order]

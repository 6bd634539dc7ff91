"""Confusion counts, positive-class Precision/Recall/F1 and ROC AUC.

Label 1 is the positive class. Ratios whose denominator is zero are
reported as 0 and flagged in :class:`MetricsReport.undefined`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, SingleClassInput


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


@dataclass(frozen=True)
class MetricsReport:
    model_name: str
    regime_name: str
    precision: float
    recall: float
    f1: float
    auc: float
    accuracy: float
    confusion: ConfusionCounts
    undefined: tuple[str, ...] = field(default_factory=tuple)


def _pair(y_true, proba):
    y = np.asarray(y_true).ravel()
    p = np.asarray(proba, dtype=float).ravel()
    if y.shape != p.shape:
        raise LengthMismatch(f"{y.size} labels but {p.size} scores")
    return y, p


def confusion(y_true, proba, threshold: float = 0.5) -> ConfusionCounts:
    """Tally predictions ``proba >= threshold`` against ``y_true``."""
    y, p = _pair(y_true, proba)
    pred = p >= threshold
    pos = y == 1
    return ConfusionCounts(tp=int(np.sum(pred & pos)), fp=int(np.sum(pred & ~pos)),
                           tn=int(np.sum(~pred & ~pos)), fn=int(np.sum(~pred & pos)))


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def precision(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fp)


def recall(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fn)


def f1(c: ConfusionCounts) -> float:
    return f1_from(precision(c), recall(c))


def f1_from(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


def accuracy(c: ConfusionCounts) -> float:
    return _ratio(c.tp + c.tn, c.total)


def rank_auc(y_true, proba) -> float:
    """Probability that a random positive outscores a random negative (ties 1/2).

    Computed from midranks of the pooled scores (Mann-Whitney U).
    """
    y, p = _pair(y_true, proba)
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput("AUC needs both classes")
    order = np.argsort(p, kind="mergesort")
    sp = p[order]
    ranks = np.empty(p.size)
    # midrank of each tie block, ranks starting at 1
    starts = np.flatnonzero(np.r_[True, sp[1:] != sp[:-1]])
    ends = np.r_[starts[1:], sp.size]
    mid = 0.5 * (starts + ends + 1)
    ranks[order] = np.repeat(mid, ends - starts)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(y_true, proba) -> RocCurve:
    """ROC points from sweeping the threshold down through each distinct score.

    The curve starts at (0, 0) and ends at (1, 1); ``auc`` on the returned
    object is the trapezoidal area under these points.
    """
    y, p = _pair(y_true, proba)
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput("ROC needs both classes")
    order = np.argsort(-p, kind="mergesort")
    sp, spos = p[order], pos[order]
    last = np.r_[sp[1:] != sp[:-1], True]
    tps = np.cumsum(spos)[last]
    fps = np.cumsum(~spos)[last]
    tpr = np.r_[0, tps] / n_pos
    fpr = np.r_[0, fps] / n_neg
    thresholds = np.r_[np.inf, sp[last]]
    return RocCurve(fpr, tpr, thresholds, trapezoid_auc(fpr, tpr))


def trapezoid_auc(fpr, tpr) -> float:
    fpr = np.asarray(fpr, dtype=float)
    tpr = np.asarray(tpr, dtype=float)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) * 0.5))


def roc_auc(y_true, proba) -> tuple[RocCurve, float]:
    """ROC curve and the rank-statistic AUC."""
    return roc_curve(y_true, proba), rank_auc(y_true, proba)


def evaluate(y_true, proba, model_name: str = "", regime_name: str = "",
             threshold: float = 0.5) -> MetricsReport:
    c = confusion(y_true, proba, threshold)
    undefined = []
    if c.tp + c.fp == 0:
        undefined.append("precision")
    if c.tp + c.fn == 0:
        undefined.append("recall")
    p, r = precision(c), recall(c)
    if p + r == 0:
        undefined.append("f1")
    try:
        auc = rank_auc(y_true, proba)
    except SingleClassInput:
        auc = 0.0
        undefined.append("auc")
    return MetricsReport(model_name, regime_name, p, r, f1_from(p, r), auc, accuracy(c), c,
                         tuple(undefined))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imbalance_forge.data import make_rng
from imbalance_forge.errors import LengthMismatch, SingleClassInput
from imbalance_forge.metrics import (
    ConfusionCounts,
    accuracy,
    confusion,
    evaluate,
    f1,
    f1_from,
    precision,
    rank_auc,
    recall,
    roc_auc,
    roc_curve,
)


def pairwise_auc(y, p):
    """O(n^2) oracle: fraction of (positive, negative) pairs ranked correctly."""
    pos = [s for s, t in zip(p, y) if t == 1]
    neg = [s for s, t in zip(p, y) if t == 0]
    wins = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a in pos for b in neg)
    return wins / (len(pos) * len(neg))


class TestConfusion:
    def test_perfect(self):
        c = confusion([0, 1, 1, 0], [0.1, 0.9, 0.8, 0.2])
        assert (c.fp, c.fn) == (0, 0)

    def test_threshold_zero(self):
        c = confusion([0, 1, 0], [0.0, 0.3, 0.9], threshold=0.0)
        assert (c.tn, c.fn) == (0, 0)

    def test_hand_tally(self):
        y = [1, 1, 1, 0, 0, 0]
        p = [0.9, 0.5, 0.2, 0.6, 0.4, 0.1]
        # predicted positive (p >= 0.5): rows 0, 1, 3
        assert confusion(y, p) == ConfusionCounts(tp=2, fp=1, tn=2, fn=1)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion([0, 1], [0.5])


class TestRatios:
    def test_formulas(self):
        assert precision(ConfusionCounts(5, 5, 0, 0)) == 0.5
        assert recall(ConfusionCounts(0, 3, 4, 0)) == 0.0
        assert f1_from(0.5, 0.5) == 0.5
        assert accuracy(ConfusionCounts(3, 1, 5, 1)) == 0.8

    def test_undefined_flags(self):
        r = evaluate([0, 0, 0], [0.1, 0.2, 0.3])
        assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)
        assert set(r.undefined) == {"precision", "recall", "f1", "auc"}

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_bounds_and_identity(self, tp, fp, tn, fn):
        c = ConfusionCounts(tp, fp, tn, fn)
        p, r = precision(c), recall(c)
        for v in (p, r, f1(c), accuracy(c)):
            assert 0.0 <= v <= 1.0
        if p + r > 0:
            assert f1(c) == 2 * p * r / (p + r)


class TestAuc:
    def test_hand_case(self):
        y = [1, 1, 0, 0]
        p = [0.9, 0.4, 0.5, 0.1]
        assert pairwise_auc(y, p) == 0.75
        assert rank_auc(y, p) == 0.75
        curve, auc = roc_auc(y, p)
        assert auc == 0.75 and curve.auc == pytest.approx(0.75, abs=1e-12)

    def test_trivial_cases(self):
        assert rank_auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0
        assert rank_auc([0, 1, 0, 1], [0.3] * 4) == 0.5

    def test_single_class(self):
        with pytest.raises(SingleClassInput):
            rank_auc([1, 1], [0.2, 0.4])
        with pytest.raises(SingleClassInput):
            roc_curve([0, 0], [0.2, 0.4])

    def test_rank_equals_trapezoid_with_ties(self):
        rng = make_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 1001))
            y = rng.integers(0, 2, n)
            y[:2] = [0, 1]
            # coarse rounding forces plenty of tied scores
            p = np.round(rng.uniform(size=n), int(rng.integers(1, 4)))
            curve = roc_curve(y, p)
            assert abs(rank_auc(y, p) - curve.auc) <= 1e-12

    def test_matches_pairwise_oracle(self):
        rng = make_rng(1)
        for _ in range(20):
            y = rng.integers(0, 2, 60)
            y[:2] = [0, 1]
            p = np.round(rng.normal(size=60), 1)
            assert rank_auc(y, p) == pytest.approx(pairwise_auc(y.tolist(), p.tolist()), abs=1e-12)

    def test_monotone_transform_invariant(self):
        rng = make_rng(2)
        y = rng.integers(0, 2, 300)
        p = rng.normal(size=300)
        base = rank_auc(y, p)
        assert rank_auc(y, np.exp(p)) == base
        assert rank_auc(y, 3 * p - 7) == base

    def test_curve_shape(self):
        rng = make_rng(3)
        y = rng.integers(0, 2, 100)
        c = roc_curve(y, np.round(rng.uniform(size=100), 1))
        assert (c.fpr[0], c.tpr[0], c.fpr[-1], c.tpr[-1]) == (0.0, 0.0, 1.0, 1.0)
        assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)
        assert 0.0 <= c.auc <= 1.0


def test_evaluate_report():
    r = evaluate([1, 1, 1, 0, 0, 0], [0.9, 0.5, 0.2, 0.6, 0.4, 0.1], "LR", "raw")
    assert (r.model_name, r.regime_name) == ("LR", "raw")
    assert r.precision == pytest.approx(2 / 3) and r.recall == pytest.approx(2 / 3)
    assert r.f1 == pytest.approx(2 / 3)
    assert r.auc == pairwise_auc([1, 1, 1, 0, 0, 0], [0.9, 0.5, 0.2, 0.6, 0.4, 0.1])
    assert r.undefined == ()

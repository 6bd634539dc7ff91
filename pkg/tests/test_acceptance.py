"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (``pytest tests/test_acceptance.py -v``) or directly
(``python tests/test_acceptance.py``). Tolerances are pinned below.
"""
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from imbalance_forge.baselines import logistic_loss_grad
from imbalance_forge.data import Dataset, make_rng
from imbalance_forge.gbdt import GbdtConfig, build_bins, goss_sample, grow_tree_leafwise, logistic_grad_hess
from imbalance_forge.metrics import f1_from, precision, rank_auc, recall, roc_curve, ConfusionCounts
from imbalance_forge.pca import fit_pca, inverse_transform, transform
from imbalance_forge.pipeline import DEFAULT_MODELS, REGIMES, ExperimentConfig, run_experiment
from imbalance_forge.resampling import (
    enn_keep_mask,
    knn,
    n_synthetic,
    neighbor_table,
    random_undersample,
    smote_samples,
)
from imbalance_forge.synthetic import make_synthetic

KNN_RUNTIME_S = 5.0
SPLIT_GAIN_TOL = 1e-9
SPLIT_RUNTIME_S = 10.0
FD_REL_TOL = 1e-5
ORTHO_TOL = 1e-8
ROUND_TRIP_TOL = 1e-6
TRACE_TOL = 1e-6
RESAMPLE_TRIALS = 1000
AUC_TOL = 1e-12
GOSS_SEEDS = 1000
GOSS_REL_TOL = 0.02
F1_LIFT = 0.10
GRID_RUNTIME_S = 120.0


def _line(n, ok, title, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} | {detail}"


def full_sort_knn(reference, query, k):
    d = sorted((float(np.linalg.norm(r - query)), i) for i, r in enumerate(reference))
    return [i for _, i in d[:k]]


def exact_root_split(X, g, h, lam):
    best = None
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        for a, b in zip(vals[:-1], vals[1:]):
            t = 0.5 * (a + b)
            m = X[:, j] <= t
            GL, HL, GR, HR = g[m].sum(), h[m].sum(), g[~m].sum(), h[~m].sum()
            gain = 0.5 * (GL**2 / (HL + lam) + GR**2 / (HR + lam) - (GL + GR)**2 / (HL + HR + lam))
            if best is None or gain > best[0]:
                best = (gain, j, t)
    return best


def criterion_1():
    rng = make_rng(1001)
    P = rng.normal(size=(200, 5))
    t0 = time.perf_counter()
    hits = sum(knn(P, q, 5).tolist() == full_sort_knn(P, q, 5) for q in rng.normal(size=(100, 5)))
    dt = time.perf_counter() - t0
    ok = hits == 100 and dt < KNN_RUNTIME_S
    return ok, f"{hits}/100 queries exact, {dt:.2f} s (limit {KNN_RUNTIME_S} s)"


def criterion_2():
    t0 = time.perf_counter()
    worst, mismatches, cases = 0.0, 0, 0
    rng = make_rng(1002)
    for trial in range(20):
        n = int(rng.integers(50, 513))
        d = int(rng.integers(1, 6))
        levels = int(rng.integers(2, 256))
        X = rng.integers(0, levels, size=(n, d)).astype(float) * rng.uniform(0.1, 10)
        y = rng.integers(0, 2, n).astype(float)
        g, h = logistic_grad_hess(y, rng.normal(size=n))
        m = build_bins(X, 255)
        tree = grow_tree_leafwise(m.transform(X), g, h,
                                  GbdtConfig(max_leaves=2, min_child_hessian=0.0), mapper=m)
        gain, j, t = exact_root_split(X, g, h, 1.0)
        cases += 1
        if tree.n_leaves != 2 or (int(tree.feature[0]), float(tree.threshold[0])) != (j, t):
            mismatches += 1
        else:
            worst = max(worst, abs(tree.gain[0] - gain))
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and worst <= SPLIT_GAIN_TOL and dt < SPLIT_RUNTIME_S
    return ok, (f"{cases - mismatches}/{cases} root splits equal, max |gain diff| {worst:.1e} "
                f"(tol {SPLIT_GAIN_TOL}), {dt:.2f} s (limit {SPLIT_RUNTIME_S} s)")


def _rel(a, b):
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-8))


def criterion_3():
    rng = make_rng(1003)
    X = rng.normal(size=(80, 4))
    y = (X[:, 0] + rng.normal(size=80) > 0).astype(float)
    eps = 1e-6
    lr_err = gb_g_err = gb_h_err = 0.0
    for _ in range(5):
        params = rng.normal(size=5)
        _, grad = logistic_loss_grad(params, X, y, 1e-2)
        fd = np.empty(5)
        for i in range(5):
            e = np.zeros(5)
            e[i] = eps
            fd[i] = (logistic_loss_grad(params + e, X, y, 1e-2)[0]
                     - logistic_loss_grad(params - e, X, y, 1e-2)[0]) / (2 * eps)
        lr_err = max(lr_err, _rel(grad, fd))
        z = rng.normal(scale=2.0, size=80)
        g, h = logistic_grad_hess(y, z)
        loss = lambda s: np.logaddexp(0.0, s) - y * s
        gb_g_err = max(gb_g_err, _rel(g, (loss(z + eps) - loss(z - eps)) / (2 * eps)))
        fd_h = (logistic_grad_hess(y, z + eps)[0] - logistic_grad_hess(y, z - eps)[0]) / (2 * eps)
        gb_h_err = max(gb_h_err, _rel(h, fd_h))
    A = rng.normal(size=(6, 6))
    Xp = rng.normal(size=(200, 6)) @ A
    m = fit_pca(Xp)
    ortho = np.abs(m.components @ m.components.T - np.eye(6)).max()
    rt = np.abs(inverse_transform(m, transform(m, Xp)) - Xp).max()
    trace = abs(m.explained_variance.sum() - np.trace(np.cov(Xp, rowvar=False)))
    ok = (max(lr_err, gb_g_err, gb_h_err) < FD_REL_TOL and ortho <= ORTHO_TOL
          and rt < ROUND_TRIP_TOL and trace <= TRACE_TOL)
    return ok, (f"FD rel err LR {lr_err:.1e}, GBDT g {gb_g_err:.1e}, h {gb_h_err:.1e} "
                f"(tol {FD_REL_TOL}); PCA ortho {ortho:.1e} (tol {ORTHO_TOL}), "
                f"round trip {rt:.1e} (tol {ROUND_TRIP_TOL}), trace {trace:.1e} (tol {TRACE_TOL})")


def criterion_4():
    rng = make_rng(1004)
    violations = {"convexity": 0, "enn": 0, "balance": 0}
    for trial in range(RESAMPLE_TRIALS):
        n0, n1, d = int(rng.integers(20, 80)), int(rng.integers(6, 20)), int(rng.integers(1, 5))
        X = np.vstack([rng.normal(size=(n0, d)), rng.normal(size=(n1, d)) + rng.uniform(0, 2)])
        y = np.r_[np.zeros(n0), np.ones(n1)]
        M = X[n0:]
        s = smote_samples(M, n_synthetic(n0, n1, 1.0), 5, make_rng(trial))
        lo, hi = np.minimum(M[s.base], M[s.neighbor]), np.maximum(M[s.base], M[s.neighbor])
        if not np.all((s.rows >= lo - 1e-12) & (s.rows <= hi + 1e-12)):
            violations["convexity"] += 1
        k = int(rng.integers(1, 6))
        keep = enn_keep_mask(X, y, k)
        table = neighbor_table(X, k)
        agree = (y[table] == y[:, None]).sum(axis=1)
        if not np.array_equal(keep, 2 * agree > k):
            violations["enn"] += 1
        out = random_undersample(Dataset(X, y, [f"f{i}" for i in range(d)]), trial)
        if int(out.labels.sum()) != n1 or out.n_rows != 2 * n1:
            violations["balance"] += 1
    # the 45,318 -> 667 shape at a tenth of the scale: 4,532 majority, 67 minority
    big = make_synthetic(seed=4)
    out = random_undersample(big, 0)
    shape = (int((out.labels == 0).sum()), int(out.labels.sum()))
    total = sum(violations.values())
    ok = total == 0 and shape == (67, 67)
    return ok, (f"{RESAMPLE_TRIALS} trials, violations {violations}; 4532:67 undersampled to "
                f"{shape[0]}:{shape[1]}")


def criterion_5():
    rng = make_rng(1005)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 1001))
        y = rng.integers(0, 2, n)
        y[:2] = [0, 1]
        p = np.round(rng.uniform(size=n), int(rng.integers(1, 4)))
        worst = max(worst, abs(rank_auc(y, p) - roc_curve(y, p).auc))
    hand = rank_auc([1, 1, 0, 0], [0.9, 0.4, 0.5, 0.1])
    f1_bad = 0
    for tp, fp, fn in rng.integers(0, 40, size=(500, 3)):
        c = ConfusionCounts(int(tp), int(fp), 0, int(fn))
        pr, rc = precision(c), recall(c)
        if pr + rc > 0 and f1_from(pr, rc) != 2 * pr * rc / (pr + rc):
            f1_bad += 1
    ok = worst <= AUC_TOL and hand == 0.75 and f1_bad == 0
    return ok, (f"max |rank - trapezoid| {worst:.1e} over 100 sets (tol {AUC_TOL}); "
                f"hand case AUC {hand}; f1 identity violations {f1_bad}")


def criterion_6():
    g = make_rng(1006).normal(size=10_000) + 0.05
    full = g.sum()
    est = np.array([np.sum(g[r] * w) for r, w in (goss_sample(g, 0.2, 0.1, s) for s in range(GOSS_SEEDS))])
    rel = abs(est.mean() - full) / abs(full)
    return rel <= GOSS_REL_TOL, (f"mean weighted sum {est.mean():.3f} vs full {full:.3f}, "
                                 f"relative error {rel:.4f} (tol {GOSS_REL_TOL})")


_RUNS = {}


def benchmark_run(tag: str):
    """Full 4-model x 3-regime grid on the seeded 4,532:67 benchmark."""
    if tag not in _RUNS:
        out = Path(tempfile.mkdtemp(prefix=f"forge-{tag}-"))
        t0 = time.perf_counter()
        report = run_experiment(ExperimentConfig(seed=0, out_dir=str(out)))
        _RUNS[tag] = (report, time.perf_counter() - t0, out / "report.csv")
    return _RUNS[tag]


def criterion_7():
    report, dt, _ = benchmark_run("first")
    complete = len(report.cells) == len(DEFAULT_MODELS) * len(REGIMES) and report.ok
    raw = report.get("lightgbm", "raw").report
    res = report.get("lightgbm", "pca_smoteenn").report
    lift = res.f1 - raw.f1
    ok = complete and lift >= F1_LIFT and res.auc >= raw.auc and dt < GRID_RUNTIME_S
    return ok, (f"LightGBM F1 raw {raw.f1:.4f} -> pca_smoteenn {res.f1:.4f} "
                f"(lift {lift:+.4f}, need >= {F1_LIFT}); AUC {raw.auc:.4f} -> {res.auc:.4f} "
                f"(need >=); grid {len(report.cells)} cells in {dt:.1f} s (limit {GRID_RUNTIME_S} s)")


def criterion_8():
    _, _, first = benchmark_run("first")
    _, _, second = benchmark_run("second")
    same = first.read_bytes() == second.read_bytes()
    return same, f"report CSVs byte-identical: {same} ({first.stat().st_size} bytes)"


CRITERIA = [
    (1, "k-NN equals full-sort oracle", criterion_1),
    (2, "histogram root split equals exact search", criterion_2),
    (3, "numerical checks (finite differences, PCA)", criterion_3),
    (4, "resampler invariants", criterion_4),
    (5, "metric identities", criterion_5),
    (6, "GOSS unbiasedness", criterion_6),
    (7, "direction of effect on the benchmark", criterion_7),
    (8, "determinism of the report CSV", criterion_8),
]


@pytest.mark.parametrize("n,title,check", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(n, title, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(n, ok, title, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for n, title, check in CRITERIA:
        ok, detail = check()
        print(_line(n, ok, title, detail), flush=True)
        results.append(ok)
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)

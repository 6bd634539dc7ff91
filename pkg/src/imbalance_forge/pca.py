"""Standardization and principal component analysis.

The standardizer uses the population standard deviation (``ddof=0``). PCA
diagonalizes the sample covariance (``ddof=1``) with a cyclic Jacobi
eigensolver, orders components by decreasing variance and flips each
component so its largest-magnitude coordinate is positive.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import DegenerateCovariance, DimensionMismatch, TooFewRows

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    std_devs: np.ndarray
    keep: np.ndarray
    input_names: tuple[str, ...]
    fit_rows: int = 0

    @property
    def dropped(self) -> list[str]:
        return [n for n, k in zip(self.input_names, self.keep) if not k]

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.keep.size:
            raise DimensionMismatch(f"expected {self.keep.size} columns")
        return (X[:, self.keep] - self.means[self.keep]) / self.std_devs[self.keep]

    def apply(self, ds: Dataset) -> Dataset:
        names = [n for n, k in zip(self.input_names, self.keep) if k]
        return ds.with_features(self.transform(ds.features), names, {
            "op": "standardize", "fit_rows": self.fit_rows, "dropped": self.dropped})


def fit_standardizer(ds: Dataset, zero_tol: float = 1e-12) -> Standardizer:
    """Column means and population standard deviations of ``ds``.

    Columns whose standard deviation does not exceed ``zero_tol`` times
    ``max(1, |mean|)`` are treated as constant and dropped on apply.
    """
    X = ds.features
    if X.shape[0] < 2:
        raise TooFewRows("standardizing needs at least 2 rows")
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    keep = sd > zero_tol * np.maximum(1.0, np.abs(mu))
    if not keep.all():
        logger.warning("dropping zero-variance columns: %s",
                       [n for n, k in zip(ds.feature_names, keep) if not k])
    sd = np.where(keep, sd, 1.0)
    return Standardizer(mu, sd, keep, ds.feature_names, X.shape[0])


# --------------------------------------------------------------------------
# eigensolver
# --------------------------------------------------------------------------

def jacobi_eigh(A, tol: float = 1e-10, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors (columns) of a symmetric matrix.

    Cyclic Jacobi: sweep over all off-diagonal pairs applying plane
    rotations until the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||A||_F)`` or ``max_sweeps`` is reached.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise DegenerateCovariance("matrix has non-finite entries")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(A)))

    def off(M):
        return float(np.linalg.norm(M - np.diag(np.diag(M))))

    for _ in range(max_sweeps):
        if off(A) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    A[p, q] = A[q, p] = 0.0
                    continue
                diff = A[q, q] - A[p, p]
                if abs(apq) < 1e-18 * abs(diff):
                    # theta^2 would overflow; t -> 1 / (2 theta)
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        if off(A) > tol * scale:
            logger.warning("jacobi_eigh: no convergence after %d sweeps", max_sweeps)
    return np.diag(A).copy(), V


# --------------------------------------------------------------------------
# PCA
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    total_variance: float

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance <= 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / self.total_variance

    def to_dict(self) -> dict:
        return {"format": "imbalance-forge/pca/1",
                "mean": self.mean.tolist(),
                "components": self.components.tolist(),
                "explained_variance": self.explained_variance.tolist(),
                "total_variance": self.total_variance}

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        comps = np.asarray(d["components"], dtype=float).reshape(-1, len(d["mean"]))
        return cls(np.asarray(d["mean"], dtype=float), comps,
                   np.asarray(d["explained_variance"], dtype=float), float(d["total_variance"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "PcaModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip rows so the first largest-magnitude coordinate of each is positive."""
    lead = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), lead])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def fit_pca(X, n_components: int | None = None, variance_threshold: float | None = None,
            tol: float = 1e-10, max_sweeps: int = 100) -> PcaModel:
    """Principal components of the rows of ``X``.

    Give at most one of ``n_components`` or ``variance_threshold``; with the
    threshold the smallest count whose cumulative explained-variance ratio
    reaches it is kept. With neither, all components are kept.
    """
    X = np.asarray(X, dtype=float)
    if n_components is not None and variance_threshold is not None:
        raise ValueError("give n_components or variance_threshold, not both")
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewRows("PCA needs at least 2 rows")
    if not np.all(np.isfinite(X)):
        raise DegenerateCovariance("input has non-finite entries")
    d = X.shape[1]
    mean = X.mean(axis=0)
    C = X - mean
    cov = C.T @ C / (X.shape[0] - 1)
    vals, vecs = jacobi_eigh(cov, tol, max_sweeps)
    order = np.argsort(-vals, kind="stable")
    vals = np.clip(vals[order], 0.0, None)
    comps = _fix_signs(vecs[:, order].T)
    total = float(np.trace(cov))
    if variance_threshold is not None:
        if not 0.0 < variance_threshold <= 1.0:
            raise ValueError("variance_threshold must lie in (0, 1]")
        ratios = np.cumsum(vals) / total if total > 0 else np.ones(d)
        m = int(np.searchsorted(ratios, variance_threshold - 1e-12, side="left")) + 1
        m = min(m, d)
    elif n_components is not None:
        if not 1 <= n_components <= d:
            raise ValueError(f"n_components must lie in [1, {d}]")
        m = n_components
    else:
        m = d
    return PcaModel(mean, comps[:m].copy(), vals[:m].copy(), total)


def transform(m: PcaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != m.mean.size:
        raise DimensionMismatch(f"expected {m.mean.size} columns")
    return (X - m.mean) @ m.components.T


def inverse_transform(m: PcaModel, scores) -> np.ndarray:
    S = np.asarray(scores, dtype=float)
    if S.ndim != 2 or S.shape[1] != m.n_components:
        raise DimensionMismatch(f"expected {m.n_components} score columns")
    return S @ m.components + m.mean


def apply_pca(m: PcaModel, ds: Dataset, fit_rows: int = 0) -> Dataset:
    names = [f"pc{i + 1}" for i in range(m.n_components)]
    return ds.with_features(transform(m, ds.features), names, {
        "op": "pca", "n_components": m.n_components, "fit_rows": fit_rows})

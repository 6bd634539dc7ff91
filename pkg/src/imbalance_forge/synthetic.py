"""Seeded two-Gaussian benchmark with a credit-style class imbalance.

The default 4,532 : 67 class counts are a tenth of the 45,318 : 667 shape
of a real retail-credit book. Both classes share one correlated covariance
``S = L L^T / n_latent + noise^2 I`` built from a random loading matrix
``L`` (so most variance lives in ``n_latent`` directions and PCA has
something to compress). The minority mean is offset from the majority mean
by ``separation`` Mahalanobis units along a random direction inside the
span of the factor loadings, so the class signal sits in the high-variance
subspace.
"""
from __future__ import annotations

import numpy as np

from .data import Dataset, make_rng


def make_synthetic(n_majority: int = 4532, n_minority: int = 67, n_features: int = 10,
                   n_latent: int = 4, separation: float = 3.0, noise: float = 0.3,
                   seed: int = 0) -> Dataset:
    """Draw the benchmark; majority rows come first, labels 0 then 1."""
    if n_features < 1 or n_latent < 1:
        raise ValueError("n_features and n_latent must be >= 1")
    rng = make_rng(seed)
    L = rng.normal(size=(n_features, n_latent))
    cov = L @ L.T / n_latent + noise ** 2 * np.eye(n_features)
    chol = np.linalg.cholesky(cov)
    # class shift lives in the span of the shared factors
    shift = L @ rng.normal(size=n_latent)
    mahal = np.sqrt(shift @ np.linalg.solve(cov, shift))
    shift *= separation / mahal
    offset = rng.normal(scale=2.0, size=n_features)
    Z = rng.standard_normal(size=(n_majority + n_minority, n_features))
    X = Z @ chol.T + offset
    X[n_majority:] += shift
    y = np.r_[np.zeros(n_majority, dtype=np.int8), np.ones(n_minority, dtype=np.int8)]
    names = [f"x{i + 1}" for i in range(n_features)]
    return Dataset(X, y, names, ({"op": "synthetic", "n_majority": n_majority,
                                  "n_minority": n_minority, "n_features": n_features,
                                  "n_latent": n_latent, "separation": separation,
                                  "noise": noise, "seed": int(seed)},))

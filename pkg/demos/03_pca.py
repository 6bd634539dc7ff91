"""
Standardizing and projecting with PCA
=====================================

Features are standardized with statistics from the training rows, then
projected onto the principal components that keep 95% of the variance. The
eigenvectors come from a cyclic Jacobi solver.
"""

import numpy as np

from imbalance_forge import fit_pca, fit_standardizer, make_synthetic
from imbalance_forge.pca import inverse_transform, transform

ds = make_synthetic(n_features=12, n_latent=3, seed=2)
z = fit_standardizer(ds).apply(ds)

full = fit_pca(z.features)
print("explained variance ratio:", np.round(full.explained_variance_ratio, 4))
print("cumulative:             ", np.round(np.cumsum(full.explained_variance_ratio), 4))

m = fit_pca(z.features, variance_threshold=0.95)
print(f"components kept for 95%: {m.n_components} of {z.n_features}")

# projecting and reconstructing loses only the discarded variance
scores = transform(m, z.features)
err = np.mean((inverse_transform(m, scores) - z.features) ** 2)
print(f"mean squared reconstruction error: {err:.4f}")
print(f"discarded variance share:          {1 - m.explained_variance_ratio.sum():.4f}")

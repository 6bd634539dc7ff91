"""
Ranking features by information value
=====================================

Information value (IV) sums ``(dist_good - dist_bad) * ln(dist_good / dist_bad)``
over quantile bins of a feature. Larger values separate the classes better.
"""

import numpy as np

from imbalance_forge import make_synthetic, rank_features
from imbalance_forge.scoring import quantile_bins, woe_iv

ds = make_synthetic(n_majority=2000, n_minority=200, seed=1)

# rank every column with 10 quantile bins and 0.5 smoothing on empty cells
for name, iv in rank_features(ds, n_bins=10, smoothing=0.5):
    print(f"{name:>4}  IV = {iv:.4f}")

# the per-bin weights of evidence behind the top feature
top = rank_features(ds)[0][0]
j = ds.feature_names.index(top)
spec = quantile_bins(ds.features[:, j], 10)
table = woe_iv(spec.assign(ds.features[:, j]), ds.labels, 0.5, n_bins=spec.n_bins)
print("WoE per bin:", np.round(table.woe, 3))

# shuffling the column destroys the signal
shuffled = np.random.default_rng(0).permutation(ds.features[:, j])
print("IV after shuffling:", round(woe_iv(spec.assign(shuffled), ds.labels, 0.5, spec.n_bins).iv, 4))

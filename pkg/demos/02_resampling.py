"""
Undersampling, SMOTE, ENN and SMOTEENN
======================================

The benchmark mirrors a 45,318 : 667 credit book at a tenth of the scale.
Each resampler below changes the class counts in its own way.
"""

from imbalance_forge import SmoteConfig, SmoteennConfig, enn, make_synthetic, random_undersample, smote, smoteenn
from imbalance_forge.resampling import undersample_ensemble


def class_counts(d):
    """(label 0, label 1) row counts."""
    n1 = int(d.labels.sum())
    return d.n_rows - n1, n1


ds = make_synthetic(seed=0)
print("original        ", class_counts(ds))

# random undersampling keeps every minority row and as many majority rows
print("undersample     ", class_counts(random_undersample(ds, seed=0)))

# several undersamples with derived seeds, for an averaged ensemble
rounds = undersample_ensemble(ds, n_rounds=5, seed=0)
print("ensemble rounds ", [class_counts(r) for r in rounds][:2], "...")

# SMOTE interpolates x + lam * (neighbor - x) between minority neighbors
over = smote(ds, SmoteConfig(k=5, target_ratio=1.0, seed=0))
print("smote           ", class_counts(over))

# ENN drops rows whose 3 nearest neighbors mostly disagree with their label
print("enn             ", class_counts(enn(ds, k=3)))

# SMOTEENN = SMOTE then ENN; the log records each pass
both = smoteenn(ds, SmoteennConfig(SmoteConfig(seed=0), enn_k=3, max_iterations=3))
print("smoteenn        ", class_counts(both))
for entry in both.transform_log:
    if entry["op"] == "smoteenn_pass":
        print("   pass", entry)

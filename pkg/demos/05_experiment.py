"""
The three-regime comparison
===========================

Four models are trained under three preprocessing regimes: raw
(standardized), PCA, and PCA followed by SMOTEENN on the training split.
All of them are scored on the same clean held-out split. The tables use the
layout Model | F1 | Recall | Precision | AUC-ROC.
"""

import sys

from imbalance_forge import ExperimentConfig, run_experiment

out_dir = sys.argv[1] if len(sys.argv) > 1 else "demo_out"
report = run_experiment(ExperimentConfig(seed=0, out_dir=out_dir))

print(open(f"{out_dir}/report.md").read())
print("seed", report.stamp["seed"], "config", report.stamp["config_hash"],
      f"{report.stamp['elapsed_seconds']} s")

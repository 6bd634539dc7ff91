"""Imbalanced binary classification on tabular data.

Information-value feature scoring, random undersampling, PCA, SMOTE / ENN /
SMOTEENN resampling, a histogram gradient-boosted tree engine with GOSS and
leaf-wise growth, baseline learners, metrics and a three-regime experiment
harness. Label 1 is the positive (minority) class throughout.
"""
from .data import Dataset, SplitSpec, load_csv, make_rng, stratified_split, write_csv
from .gbdt import GbdtConfig, GbdtModel, GossConfig
from .metrics import evaluate, rank_auc, roc_auc
from .pca import fit_pca, fit_standardizer
from .pipeline import ExperimentConfig, run_experiment
from .resampling import SmoteConfig, SmoteennConfig, enn, random_undersample, smote, smoteenn
from .scoring import feature_iv, rank_features
from .synthetic import make_synthetic

__version__ = "0.1.0"

__all__ = [
    "Dataset", "SplitSpec", "load_csv", "make_rng", "stratified_split", "write_csv",
    "GbdtConfig", "GbdtModel", "GossConfig", "evaluate", "rank_auc", "roc_auc",
    "fit_pca", "fit_standardizer", "ExperimentConfig", "run_experiment",
    "SmoteConfig", "SmoteennConfig", "enn", "random_undersample", "smote", "smoteenn",
    "feature_iv", "rank_features", "make_synthetic",
]

"""Name-based model registry shared by the experiment runner and the CLI.

Persisted models are JSON objects whose ``"kind"`` field selects the loader.
"""
from __future__ import annotations

import json
from dataclasses import fields, replace
from pathlib import Path

from . import gbdt
from .baselines import (
    ForestConfig,
    ForestModel,
    LogisticConfig,
    LogisticModel,
    TreeConfig,
    TreeModel,
    fit_forest,
    fit_logistic,
    fit_tree,
)

DISPLAY_NAMES = {
    "logistic": "LR",
    "decision_tree": "Decision Tree",
    "random_forest": "Random Forest",
    "xgboost": "XGBoost",
    "lightgbm": "LightGBM",
}

MODEL_KINDS = tuple(DISPLAY_NAMES)


def default_config(kind: str):
    if kind == "logistic":
        return LogisticConfig()
    if kind == "decision_tree":
        return TreeConfig()
    if kind == "random_forest":
        return ForestConfig()
    if kind == "xgboost":
        return gbdt.GbdtConfig.xgboost_like()
    if kind == "lightgbm":
        return gbdt.GbdtConfig.lightgbm_like()
    raise KeyError(f"unknown model {kind!r}; choose from {MODEL_KINDS}")


def make_config(kind: str, overrides: dict | None = None, seed: int | None = None):
    """Default config for ``kind`` with ``overrides`` applied (unknown keys rejected)."""
    cfg = default_config(kind)
    overrides = dict(overrides or {})
    names = {f.name for f in fields(cfg)}
    if seed is not None and "seed" in names and "seed" not in overrides:
        overrides["seed"] = seed
    bad = set(overrides) - names
    if bad:
        raise KeyError(f"unknown {kind} config fields: {sorted(bad)}")
    if kind in ("xgboost", "lightgbm") and isinstance(overrides.get("goss"), dict):
        overrides["goss"] = gbdt.GossConfig(**overrides["goss"])
    return replace(cfg, **overrides)


def fit_model(kind: str, X, y, config=None):
    cfg = config if config is not None else default_config(kind)
    if kind == "logistic":
        return fit_logistic(X, y, cfg)
    if kind == "decision_tree":
        return fit_tree(X, y, cfg)
    if kind == "random_forest":
        return fit_forest(X, y, cfg)
    if kind in ("xgboost", "lightgbm"):
        return gbdt.fit(X, y, cfg)
    raise KeyError(f"unknown model {kind!r}; choose from {MODEL_KINDS}")


_LOADERS = {
    "logistic": LogisticModel.from_dict,
    "decision_tree": TreeModel.from_dict,
    "random_forest": ForestModel.from_dict,
    "gbdt": gbdt.GbdtModel.from_dict,
}


def model_from_dict(d: dict):
    try:
        return _LOADERS[d["kind"]](d)
    except KeyError:
        raise KeyError(f"unknown persisted model kind {d.get('kind')!r}") from None


def save_model(model, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(model.to_dict()))


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))

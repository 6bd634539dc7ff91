"""Three-regime experiment harness.

Regimes, in order:

``raw``
    standardize only.
``pca``
    standardize, then project onto principal components.
``pca_smoteenn``
    standardize, PCA, then SMOTEENN on the training split.

Every transform is fitted on the training split and only applied to the
test split; resampling never touches test rows.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import logging
import time
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import models as _models
from .data import Dataset, SplitSpec, derive_seed, load_csv, stratified_split
from .metrics import MetricsReport, evaluate
from .pca import apply_pca, fit_pca, fit_standardizer
from .resampling import SmoteConfig, SmoteennConfig, smoteenn, undersample_ensemble
from .synthetic import make_synthetic

logger = logging.getLogger(__name__)

REGIMES = ("raw", "pca", "pca_smoteenn")
REGIME_TITLES = {
    "raw": "Model performance on raw data",
    "pca": "Model performance with PCA",
    "pca_smoteenn": "Model performance with PCA and SMOTEENN",
}
DEFAULT_MODELS = ("logistic", "decision_tree", "random_forest", "lightgbm")
REPORT_COLUMNS = ("regime", "model", "f1", "recall", "precision", "auc_roc", "accuracy",
                  "tp", "fp", "tn", "fn", "undefined", "status", "error")


@dataclass
class ExperimentConfig:
    """Experiment protocol; load from JSON with :meth:`from_dict`.

    With ``input`` unset the seeded synthetic benchmark (``synthetic``
    keyword arguments) is used as data.
    """
    input: str | None = None
    label_column: str = "label"
    label_map: dict | None = None
    missing_policy: str = "error"
    synthetic: dict = field(default_factory=dict)
    test_fraction: float = 0.2
    stratified: bool = True
    regimes: list = field(default_factory=lambda: list(REGIMES))
    models: list = field(default_factory=lambda: list(DEFAULT_MODELS))
    model_configs: dict = field(default_factory=dict)
    pca_variance_threshold: float | None = 0.95
    pca_n_components: int | None = None
    smote_k: int = 5
    smote_target_ratio: float = 1.0
    enn_k: int = 3
    smoteenn_max_iterations: int = 1
    balance_tolerance: float = 0.05
    enn_majority_only: bool = False
    undersample: bool = False
    ensemble_rounds: int = 1
    threshold: float = 0.5
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        if not self.regimes:
            raise ValueError("at least one regime is required")
        if not self.models:
            raise ValueError("at least one model is required")
        bad = [r for r in self.regimes if r not in REGIMES]
        if bad:
            raise ValueError(f"unknown regimes {bad}; choose from {REGIMES}")
        for kind in self.models:
            _models.make_config(kind, self.model_configs.get(kind))
        if self.ensemble_rounds < 1:
            raise ValueError("ensemble_rounds must be >= 1")
        # validates the split and resampler settings up front
        SplitSpec(self.test_fraction, self.stratified, 0)
        self.smoteenn_config(0)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(d) - known
        if bad:
            raise KeyError(f"unknown experiment config keys: {sorted(bad)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def smoteenn_config(self, seed: int) -> SmoteennConfig:
        return SmoteennConfig(SmoteConfig(self.smote_k, self.smote_target_ratio, seed),
                              self.enn_k, self.smoteenn_max_iterations,
                              self.balance_tolerance, self.enn_majority_only)


@dataclass(frozen=True)
class CellResult:
    model: str
    regime: str
    report: MetricsReport | None = None
    error: str | None = None


@dataclass
class ExperimentReport:
    cells: list
    stamp: dict

    @property
    def ok(self) -> bool:
        return all(c.error is None for c in self.cells)

    def get(self, model: str, regime: str) -> CellResult:
        for c in self.cells:
            if c.model == model and c.regime == regime:
                return c
        raise KeyError((model, regime))


def _key(text: str) -> int:
    return zlib.crc32(text.encode())


def load_data(cfg: ExperimentConfig) -> Dataset:
    if cfg.input:
        return load_csv(cfg.input, cfg.label_column, cfg.missing_policy, cfg.label_map)
    params = {"seed": cfg.seed, **cfg.synthetic}
    return make_synthetic(**params)


def run_regime(train: Dataset, test: Dataset, regime: str,
               cfg: ExperimentConfig | None = None) -> tuple[Dataset, Dataset]:
    """Fit the regime's transforms on ``train``; apply them to both splits."""
    cfg = cfg or ExperimentConfig()
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    std = fit_standardizer(train)
    tr, te = std.apply(train), std.apply(test)
    if regime == "raw":
        return tr, te
    pca = fit_pca(tr.features, n_components=cfg.pca_n_components,
                  variance_threshold=None if cfg.pca_n_components else cfg.pca_variance_threshold)
    tr, te = apply_pca(pca, tr, tr.n_rows), apply_pca(pca, te, tr.n_rows)
    if regime == "pca":
        return tr, te
    tr = smoteenn(tr, cfg.smoteenn_config(derive_seed(cfg.seed, _key("smoteenn"))))
    return tr, te


def _fit_predict(kind: str, train: Dataset, X_test, cfg: ExperimentConfig) -> np.ndarray:
    seed = derive_seed(cfg.seed, _key(kind))
    mcfg = _models.make_config(kind, cfg.model_configs.get(kind), seed=seed)
    if not cfg.undersample:
        return _models.fit_model(kind, train.features, train.labels, mcfg).predict_proba(X_test)
    members = undersample_ensemble(train, cfg.ensemble_rounds, derive_seed(seed, _key("undersample")))
    probs = [_models.fit_model(kind, m.features, m.labels, mcfg).predict_proba(X_test)
             for m in members]
    return np.mean(probs, axis=0)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentReport:
    """Evaluate every (model, regime) cell on the held-out test split.

    A failing cell is recorded with its error and the run continues. With
    ``write`` the report is rendered into ``cfg.out_dir``.
    """
    t0 = time.perf_counter()
    ds = load_data(cfg)
    train, test = stratified_split(ds, SplitSpec(cfg.test_fraction, cfg.stratified,
                                                 derive_seed(cfg.seed, _key("split"))))
    cells = []
    for regime in cfg.regimes:
        try:
            tr, te = run_regime(train, test, regime, cfg)
        except Exception as exc:  # noqa: BLE001 - recorded per cell
            logger.warning("regime %s failed: %s", regime, exc)
            cells += [CellResult(m, regime, error=f"{type(exc).__name__}: {exc}")
                      for m in cfg.models]
            continue
        for kind in cfg.models:
            try:
                proba = _fit_predict(kind, tr, te.features, cfg)
                rep = evaluate(te.labels, proba, kind, regime, cfg.threshold)
                cells.append(CellResult(kind, regime, rep))
            except Exception as exc:  # noqa: BLE001 - recorded per cell
                logger.warning("cell (%s, %s) failed: %s", kind, regime, exc)
                cells.append(CellResult(kind, regime, error=f"{type(exc).__name__}: {exc}"))
    r_order = {r: i for i, r in enumerate(REGIMES)}
    m_order = {m: i for i, m in enumerate(cfg.models)}
    cells.sort(key=lambda c: (r_order[c.regime], m_order[c.model]))
    stamp = {"seed": cfg.seed, "config_hash": cfg.config_hash(),
             "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
             "elapsed_seconds": round(time.perf_counter() - t0, 3),
             "train_rows": train.n_rows, "test_rows": test.n_rows}
    report = ExperimentReport(cells, stamp)
    if write:
        render_report(report, cfg.out_dir, config=cfg)
    return report


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------

def _row(c: CellResult) -> list:
    if c.report is None:
        return [c.regime, c.model] + [""] * 9 + ["", "error", c.error]
    r = c.report
    k = r.confusion
    return [c.regime, c.model, repr(r.f1), repr(r.recall), repr(r.precision), repr(r.auc),
            repr(r.accuracy), k.tp, k.fp, k.tn, k.fn, ";".join(r.undefined), "ok", ""]


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for c in report.cells:
        w.writerow(_row(c))
    return buf.getvalue()


def markdown_table(cells) -> str:
    lines = ["| Model | F1 | Recall | Precision | AUC-ROC |",
             "|---|---|---|---|---|"]
    for c in cells:
        name = _models.DISPLAY_NAMES.get(c.model, c.model)
        if c.report is None:
            lines.append(f"| {name} | error | error | error | error |")
        else:
            r = c.report
            lines.append(f"| {name} | {r.f1:.4f} | {r.recall:.4f} | {r.precision:.4f} | {r.auc:.4f} |")
    return "\n".join(lines)


def report_markdown(report: ExperimentReport) -> str:
    parts = []
    for regime in REGIMES:
        cells = [c for c in report.cells if c.regime == regime]
        if cells:
            parts.append(f"## {REGIME_TITLES[regime]}\n\n{markdown_table(cells)}\n")
    return "\n".join(parts)


def render_report(report: ExperimentReport, out_dir, config: ExperimentConfig | None = None) -> dict:
    """Write ``report.csv``, ``report.md`` and ``meta.json`` into ``out_dir``.

    The CSV carries no timestamp, so equal seeds and configs give
    byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / "report.csv", "markdown": out / "report.md", "meta": out / "meta.json"}
    paths["csv"].write_text(report_csv(report), encoding="utf-8")
    paths["markdown"].write_text(report_markdown(report), encoding="utf-8")
    meta = dict(report.stamp)
    if config is not None:
        meta["config"] = config.to_dict()
    paths["meta"].write_text(json.dumps(meta, indent=2, sort_keys=True, default=str))
    return paths


def read_report_csv(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))

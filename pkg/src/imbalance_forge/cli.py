"""Command-line entry point: ``imbalance-forge <command> [options]``.

Every command accepts ``--config FILE`` (a JSON object of option values)
and ``--out-dir``. Flags given on the command line override the config
file. Exit status is 0 on success, 1 on a usage or data error and 2 when an
experiment finishes with some failed cells.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import models as _models
from .data import Dataset, load_csv, write_csv
from .errors import ForgeError
from .gbdt import GossConfig
from .metrics import evaluate
from .pca import PcaModel, Standardizer, apply_pca, fit_pca, fit_standardizer
from .pipeline import CellResult, ExperimentConfig, markdown_table, run_experiment
from .resampling import SmoteConfig, SmoteennConfig, enn, random_undersample, smote, smoteenn
from .scoring import rank_features
from .synthetic import make_synthetic


def _model_fields() -> dict:
    """Union of model config fields -> python type, for the ``train`` flags."""
    out = {}
    for kind in _models.MODEL_KINDS:
        for f in fields(_models.default_config(kind)):
            if f.name != "goss":
                v = getattr(_models.default_config(kind), f.name)
                out.setdefault(f.name, float if v is None else type(v))
    return out


def _opts(args, cfg: dict, names) -> dict:
    """Merge config-file values with explicitly given flags (flags win)."""
    merged = {k: cfg[k] for k in names if k in cfg}
    for k in names:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return merged


def _load(args, cfg) -> Dataset:
    path = getattr(args, "input", None) or cfg.get("input")
    if not path:
        raise ForgeError("--input is required")
    return load_csv(path, args.label_column or cfg.get("label_column", "label"),
                    args.missing_policy or cfg.get("missing_policy", "error"),
                    cfg.get("label_map"))


def _label_counts(ds: Dataset) -> tuple[int, int]:
    n1 = int(np.sum(ds.labels == 1))
    return ds.n_rows - n1, n1


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=str))


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_synth(args, cfg, out: Path) -> int:
    names = ("n_majority", "n_minority", "n_features", "n_latent", "separation", "noise", "seed")
    ds = make_synthetic(**_opts(args, cfg, names))
    write_csv(ds, out / "synthetic.csv")
    print(f"wrote {ds.n_rows} rows to {out / 'synthetic.csv'}")
    return 0


def cmd_ingest(args, cfg, out: Path) -> int:
    ds = _load(args, cfg)
    write_csv(ds, out / "clean.csv")
    n0, n1 = _label_counts(ds)
    summary = {"rows": ds.n_rows, "features": list(ds.feature_names), "class_0": n0,
               "class_1": n1, "log": list(ds.transform_log)}
    _write_json(out / "ingest.json", summary)
    print(f"{ds.n_rows} rows, {ds.n_features} features, classes 0/1 = {n0}/{n1}")
    return 0


def cmd_score_features(args, cfg, out: Path) -> int:
    ds = _load(args, cfg)
    o = _opts(args, cfg, ("n_bins", "smoothing"))
    ranked = rank_features(ds, o.get("n_bins", 10), o.get("smoothing", 0.5))
    out.mkdir(parents=True, exist_ok=True)
    with (out / "iv.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "iv"])
        for name, iv in ranked:
            w.writerow([name, repr(iv)])
            print(f"{name}\t{iv:.4f}")
    return 0


def cmd_resample(args, cfg, out: Path) -> int:
    ds = _load(args, cfg)
    o = _opts(args, cfg, ("method", "k", "target_ratio", "enn_k", "max_iterations",
                          "balance_tolerance", "seed"))
    method = o.get("method", "smoteenn")
    seed = o.get("seed", 0)
    smote_cfg = SmoteConfig(o.get("k", 5), o.get("target_ratio", 1.0), seed)
    if method == "undersample":
        res = random_undersample(ds, seed)
    elif method == "smote":
        res = smote(ds, smote_cfg)
    elif method == "enn":
        res = enn(ds, o.get("enn_k", 3))
    elif method == "smoteenn":
        res = smoteenn(ds, SmoteennConfig(smote_cfg, o.get("enn_k", 3), o.get("max_iterations", 1),
                                          o.get("balance_tolerance", 0.05)))
    else:
        raise ForgeError(f"unknown resampling method {method!r}")
    write_csv(res, out / "resampled.csv")
    n0, n1 = _label_counts(res)
    print(f"{method}: {ds.n_rows} -> {res.n_rows} rows, classes 0/1 = {n0}/{n1}")
    return 0


def _standardizer_dict(s: Standardizer) -> dict:
    return {"means": s.means.tolist(), "std_devs": s.std_devs.tolist(),
            "keep": np.asarray(s.keep).tolist(), "input_names": list(s.input_names),
            "fit_rows": s.fit_rows}


def _standardizer_from(d: dict) -> Standardizer:
    return Standardizer(np.asarray(d["means"]), np.asarray(d["std_devs"]),
                        np.asarray(d["keep"], dtype=bool), tuple(d["input_names"]),
                        int(d.get("fit_rows", 0)))


def cmd_pca(args, cfg, out: Path) -> int:
    ds = _load(args, cfg)
    o = _opts(args, cfg, ("variance_threshold", "n_components", "apply"))
    if o.get("apply"):
        saved = json.loads(Path(o["apply"]).read_text())
        std = _standardizer_from(saved["standardizer"]) if saved.get("standardizer") else None
        model = PcaModel.from_dict(saved["pca"])
        z = std.apply(ds) if std else ds
        res = apply_pca(model, z, std.fit_rows if std else 0)
    else:
        std = None if args.no_standardize else fit_standardizer(ds)
        z = std.apply(ds) if std else ds
        n_comp = o.get("n_components")
        thr = None if n_comp else o.get("variance_threshold", 0.95)
        model = fit_pca(z.features, n_components=n_comp, variance_threshold=thr)
        _write_json(out / "pca.json", {"standardizer": _standardizer_dict(std) if std else None,
                                       "pca": model.to_dict()})
        res = apply_pca(model, z, ds.n_rows)
        ratio = model.explained_variance_ratio
        print(f"kept {model.n_components} of {z.n_features} components "
              f"({ratio.sum():.4f} of the variance)")
    write_csv(res, out / "projected.csv")
    return 0


def _train_config(args, cfg: dict):
    kind = args.model or cfg.get("model")
    if not kind:
        raise ForgeError("--model is required")
    overrides = {k: v for k, v in cfg.items() if k not in ("model", "input", "label_column",
                                                           "missing_policy", "label_map")}
    valid = {f.name for f in fields(_models.default_config(kind))}
    for name in _model_fields():
        v = getattr(args, name, None)
        if v is not None:
            if name not in valid:
                raise ForgeError(f"--{name.replace('_', '-')} does not apply to {kind}")
            overrides[name] = v
    if kind in ("xgboost", "lightgbm"):
        if args.no_goss:
            overrides["goss"] = None
        elif args.goss_a is not None or args.goss_b is not None:
            base = _models.default_config(kind).goss or GossConfig()
            overrides["goss"] = GossConfig(args.goss_a if args.goss_a is not None else base.a,
                                           args.goss_b if args.goss_b is not None else base.b)
    return kind, _models.make_config(kind, overrides)


def cmd_train(args, cfg, out: Path) -> int:
    ds = _load(args, cfg)
    kind, mcfg = _train_config(args, cfg)
    model = _models.fit_model(kind, ds.features, ds.labels, mcfg)
    _models.save_model(model, out / "model.json")
    print(f"trained {kind} on {ds.n_rows} rows -> {out / 'model.json'}")
    return 0


def cmd_predict(args, cfg, out: Path) -> int:
    ds = _load(args, cfg)
    path = args.model_file or cfg.get("model_file")
    if not path:
        raise ForgeError("--model-file is required")
    proba = _models.load_model(path).predict_proba(ds.features)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "predictions.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "proba"])
        for lab, p in zip(ds.labels, proba):
            w.writerow([int(lab), repr(float(p))])
    print(f"wrote {proba.size} predictions to {out / 'predictions.csv'}")
    return 0


def cmd_evaluate(args, cfg, out: Path) -> int:
    path = args.predictions or cfg.get("predictions")
    if not path:
        raise ForgeError("--predictions is required")
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    y = np.array([int(r["label"]) for r in rows])
    p = np.array([float(r["proba"]) for r in rows])
    o = _opts(args, cfg, ("threshold", "model_name", "regime"))
    rep = evaluate(y, p, o.get("model_name", "model"), o.get("regime", "raw"),
                   o.get("threshold", 0.5))
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "metrics.csv"
    new = not csv_path.exists()
    with csv_path.open("a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(["regime", "model", "f1", "recall", "precision", "auc_roc", "accuracy",
                        "tp", "fp", "tn", "fn", "undefined"])
        c = rep.confusion
        w.writerow([rep.regime_name, rep.model_name, repr(rep.f1), repr(rep.recall),
                    repr(rep.precision), repr(rep.auc), repr(rep.accuracy),
                    c.tp, c.fp, c.tn, c.fn, ";".join(rep.undefined)])
    table = markdown_table([CellResult(rep.model_name, rep.regime_name, rep)])
    with (out / "metrics.md").open("a") as fh:
        fh.write(table + "\n\n")
    print(table)
    return 0


_EXPERIMENT_FLAGS = ("input", "label_column", "missing_policy", "test_fraction", "regimes",
                     "models", "pca_variance_threshold", "pca_n_components", "smote_k",
                     "smote_target_ratio", "enn_k", "smoteenn_max_iterations",
                     "balance_tolerance", "ensemble_rounds", "threshold", "seed")


def cmd_experiment(args, cfg, out: Path) -> int:
    d = dict(cfg)
    d.update(_opts(args, {}, _EXPERIMENT_FLAGS))
    if args.undersample:
        d["undersample"] = True
    d["out_dir"] = str(out)
    report = run_experiment(ExperimentConfig.from_dict(d))
    print((out / "report.md").read_text())
    failed = [c for c in report.cells if c.error]
    for c in failed:
        print(f"cell ({c.model}, {c.regime}) failed: {c.error}", file=sys.stderr)
    return 0 if not failed else 2


COMMANDS = {
    "ingest": cmd_ingest,
    "score-features": cmd_score_features,
    "resample": cmd_resample,
    "pca": cmd_pca,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imbalance-forge",
                                     description="Imbalanced binary classification toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, data=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file of option values")
        p.add_argument("--out-dir", default=None, help="output directory (default: out)")
        if data:
            p.add_argument("--input", help="input CSV")
            p.add_argument("--label-column", default=None)
            p.add_argument("--missing-policy", choices=("error", "impute_median"), default=None)
        return p

    p = add("synth", "write the seeded synthetic benchmark", data=False)
    for name, typ in (("n_majority", int), ("n_minority", int), ("n_features", int),
                      ("n_latent", int), ("separation", float), ("noise", float), ("seed", int)):
        p.add_argument("--" + name.replace("_", "-"), type=typ, dest=name)

    add("ingest", "validate a CSV and write a cleaned copy")

    p = add("score-features", "rank features by information value")
    p.add_argument("--n-bins", type=int, dest="n_bins")
    p.add_argument("--smoothing", type=float)

    p = add("resample", "undersample, SMOTE, ENN or SMOTEENN a CSV")
    p.add_argument("--method", choices=("undersample", "smote", "enn", "smoteenn"))
    p.add_argument("--k", type=int, help="SMOTE neighbors")
    p.add_argument("--target-ratio", type=float, dest="target_ratio")
    p.add_argument("--enn-k", type=int, dest="enn_k")
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--balance-tolerance", type=float, dest="balance_tolerance")
    p.add_argument("--seed", type=int)

    p = add("pca", "standardize and project onto principal components")
    p.add_argument("--variance-threshold", type=float, dest="variance_threshold")
    p.add_argument("--n-components", type=int, dest="n_components")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--apply", help="project with a saved pca.json instead of fitting")

    p = add("train", "fit one model and save it as JSON")
    p.add_argument("--model", choices=_models.MODEL_KINDS)
    for name, typ in _model_fields().items():
        kw = {"type": typ} if typ is not bool else {"type": lambda s: s.lower() in ("1", "true", "yes")}
        p.add_argument("--" + name.replace("_", "-"), dest=name, **kw)
    p.add_argument("--goss-a", type=float, dest="goss_a")
    p.add_argument("--goss-b", type=float, dest="goss_b")
    p.add_argument("--no-goss", action="store_true", dest="no_goss")

    p = add("predict", "score a CSV with a saved model")
    p.add_argument("--model-file", dest="model_file")

    p = add("evaluate", "metrics from a predictions CSV", data=False)
    p.add_argument("--predictions")
    p.add_argument("--threshold", type=float)
    p.add_argument("--model-name", dest="model_name")
    p.add_argument("--regime")

    p = add("experiment", "run the three-regime model comparison")
    p.add_argument("--test-fraction", type=float, dest="test_fraction")
    p.add_argument("--regimes", nargs="+")
    p.add_argument("--models", nargs="+")
    p.add_argument("--pca-variance-threshold", type=float, dest="pca_variance_threshold")
    p.add_argument("--pca-n-components", type=int, dest="pca_n_components")
    p.add_argument("--smote-k", type=int, dest="smote_k")
    p.add_argument("--smote-target-ratio", type=float, dest="smote_target_ratio")
    p.add_argument("--enn-k", type=int, dest="enn_k")
    p.add_argument("--smoteenn-max-iterations", type=int, dest="smoteenn_max_iterations")
    p.add_argument("--balance-tolerance", type=float, dest="balance_tolerance")
    p.add_argument("--undersample", action="store_true")
    p.add_argument("--ensemble-rounds", type=int, dest="ensemble_rounds")
    p.add_argument("--threshold", type=float)
    p.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = json.loads(Path(args.config).read_text()) if args.config else {}
        if not isinstance(cfg, dict):
            raise ForgeError("--config must hold a JSON object")
        out = Path(args.out_dir or cfg.pop("out_dir", None) or "out")
        cfg.pop("out_dir", None)
        return COMMANDS[args.command](args, cfg, out)
    except (ForgeError, KeyError, ValueError, OSError) as exc:
        print(f"imbalance-forge {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

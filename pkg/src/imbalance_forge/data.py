"""Tabular data model, CSV ingestion, seeded randomness and splitting.

Labels are encoded with 1 for the minority / "not approve" / default class
and 0 for the majority class. All randomized code in the package draws from
:func:`make_rng`, a PCG64 generator, so a fixed integer seed replays every
experiment exactly.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ClassTooSmall,
    EmptyFile,
    LabelNotBinary,
    MissingColumn,
    NonNumericCell,
)

logger = logging.getLogger(__name__)

DEFAULT_LABEL_MAP: dict[str, int] = {
    "0": 0,
    "1": 1,
    "approve": 0,
    "not approve": 1,
    "reject": 1,
    "good": 0,
    "bad": 1,
}

LABEL_COLUMN = "label"


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` (any non-negative integer)."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed of ``seed`` for the integer path ``keys``."""
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix with binary labels.

    ``transform_log`` is the ordered provenance of every transform applied
    since ingestion; each entry is a plain dict with at least an ``"op"`` key.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    transform_log: tuple[dict, ...] = field(default_factory=tuple)

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, len(self.feature_names))
        y = np.array(self.labels, copy=True).astype(np.int8).ravel()
        names = tuple(str(n) for n in self.feature_names)
        if X.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if X.shape[1] != len(names):
            raise ValueError(f"{X.shape[1]} columns but {len(names)} feature names")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise LabelNotBinary("labels must be 0 or 1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "transform_log", tuple(dict(e) for e in self.transform_log))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, rows, log_entry: dict | None = None) -> "Dataset":
        """Subset of rows (in the given order), optionally logging the step."""
        rows = np.asarray(rows, dtype=np.intp)
        log = self.transform_log + ((log_entry,) if log_entry else ())
        return Dataset(self.features[rows], self.labels[rows], self.feature_names, log)

    def with_features(self, X, names: Sequence[str], log_entry: dict) -> "Dataset":
        return Dataset(X, self.labels, tuple(names), self.transform_log + (log_entry,))

    def append_rows(self, X, y, log_entry: dict) -> "Dataset":
        X = np.vstack([self.features, np.asarray(X, dtype=np.float64).reshape(-1, self.n_features)])
        y = np.concatenate([self.labels, np.asarray(y, dtype=np.int8)])
        return Dataset(X, y, self.feature_names, self.transform_log + (log_entry,))

    def logged(self, log_entry: dict) -> "Dataset":
        return Dataset(self.features, self.labels, self.feature_names,
                       self.transform_log + (log_entry,))


def class_counts(ds: Dataset) -> tuple[int, int]:
    """Return ``(n_majority, n_minority)``; a tie reports ``(n0, n1)``."""
    n1 = int(np.sum(ds.labels == 1))
    n0 = ds.n_rows - n1
    return (n1, n0) if n1 > n0 else (n0, n1)


def minority_label(ds: Dataset) -> int:
    """Label of the smaller class; label 1 on a tie."""
    n1 = int(np.sum(ds.labels == 1))
    return 0 if ds.n_rows - n1 < n1 else 1


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def _parse_float(text: str) -> float | None:
    text = text.strip()
    if text == "":
        return None
    v = float(text)
    return v if math.isfinite(v) else None


def load_csv(path, label_column: str = LABEL_COLUMN,
             missing_policy: str = "error",
             label_map: Mapping[str, int] | None = None) -> Dataset:
    """Read a comma-separated, headed, UTF-8 file into a :class:`Dataset`.

    Label text is stripped and lower-cased before lookup in ``label_map``
    (``DEFAULT_LABEL_MAP`` when omitted). Empty or non-finite numeric cells
    are errors under ``missing_policy="error"`` and replaced by the column
    median of the parsed values under ``"impute_median"``.
    """
    if missing_policy not in ("error", "impute_median"):
        raise ValueError(f"unknown missing_policy {missing_policy!r}")
    lmap = {str(k).strip().lower(): int(v)
            for k, v in (DEFAULT_LABEL_MAP if label_map is None else label_map).items()}
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise EmptyFile(f"{path}: no header")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise EmptyFile(f"{path}: no data rows")
    if label_column not in header:
        raise MissingColumn(f"{path}: label column {label_column!r} not in header")
    li = header.index(label_column)
    feat_cols = [i for i in range(len(header)) if i != li]
    names = [header[i] for i in feat_cols]

    raw_labels = []
    X = np.empty((len(body), len(feat_cols)))
    missing = np.zeros_like(X, dtype=bool)
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise NonNumericCell(f"{path}:{r}: expected {len(header)} cells, got {len(row)}")
        raw_labels.append(row[li].strip().lower())
        for j, ci in enumerate(feat_cols):
            try:
                v = _parse_float(row[ci])
            except ValueError:
                raise NonNumericCell(f"{path}:{r}: column {header[ci]!r} "
                                     f"has non-numeric cell {row[ci]!r}") from None
            if v is None:
                if missing_policy == "error":
                    raise NonNumericCell(f"{path}:{r}: column {header[ci]!r} is empty")
                missing[r - 2, j] = True
                X[r - 2, j] = np.nan
            else:
                X[r - 2, j] = v

    distinct = sorted(set(raw_labels))
    if len(distinct) > 2:
        raise LabelNotBinary(f"label column has {len(distinct)} distinct values: {distinct}")
    unmapped = [v for v in distinct if v not in lmap]
    if unmapped:
        raise LabelNotBinary(f"labels {unmapped} not in label map")
    y = np.array([lmap[v] for v in raw_labels], dtype=np.int8)
    if not np.all((y == 0) | (y == 1)):
        raise LabelNotBinary("label map must send labels to 0 or 1")

    imputed = {}
    for j in np.flatnonzero(missing.any(axis=0)):
        present = X[~missing[:, j], j]
        if present.size == 0:
            raise NonNumericCell(f"column {names[j]!r} has no numeric values to impute from")
        med = float(np.median(present))
        X[missing[:, j], j] = med
        imputed[names[j]] = int(missing[:, j].sum())

    entry = {"op": "load_csv", "path": str(path), "rows": len(body),
             "missing_policy": missing_policy}
    if imputed:
        entry["imputed"] = imputed
    return Dataset(X, y, names, (entry,))


def write_csv(ds: Dataset, path, label_column: str = LABEL_COLUMN) -> None:
    """Write ``ds`` in the package CSV format (features then a 0/1 label column).

    Floats use ``repr`` so a reload reproduces the matrix bit for bit.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.feature_names) + [label_column])
        for x, lab in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in x] + [int(lab)])


# --------------------------------------------------------------------------
# splitting
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie strictly between 0 and 1")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded train/test split.

    With ``spec.stratified`` each class contributes
    ``round(class_count * test_fraction)`` rows (half rounds up) to the test
    set. Both halves keep the original row order.
    """
    rng = make_rng(spec.seed)
    test_rows = []
    if spec.stratified:
        for label in (0, 1):
            idx = np.flatnonzero(ds.labels == label)
            if idx.size == 0:
                continue
            if idx.size < 2:
                raise ClassTooSmall(f"class {label} has {idx.size} sample(s); need >= 2")
            n_test = _round_half_up(idx.size * spec.test_fraction)
            test_rows.append(rng.permutation(idx)[:n_test])
    else:
        n_test = _round_half_up(ds.n_rows * spec.test_fraction)
        test_rows.append(rng.permutation(ds.n_rows)[:n_test])
    test_idx = np.sort(np.concatenate(test_rows)) if test_rows else np.empty(0, np.intp)
    mask = np.zeros(ds.n_rows, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    base = {"test_fraction": spec.test_fraction, "stratified": spec.stratified,
            "seed": spec.seed}
    train = ds.take(train_idx, {"op": "split", "part": "train", **base})
    test = ds.take(test_idx, {"op": "split", "part": "test", **base})
    return train, test

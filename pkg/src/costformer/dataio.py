"""Raw-file parsing into :class:`DatasetTable` and stratified splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import RngStream

ORIGINS = ("aps_train", "aps_test", "secom", "generic")


class ParseError(ValueError):
    pass


@dataclass
class DatasetTable:
    """Feature matrix with NaN marking missing cells, plus 0/1 labels."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    origin: str = "generic"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError(
                f"label count {self.labels.shape[0]} != feature rows {self.features.shape[0]}")
        if self.labels.size and not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0/1")
        if len(self.feature_names) != self.features.shape[1]:
            raise ValueError("feature_names length does not match feature columns")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.features)

    def take(self, rows) -> "DatasetTable":
        rows = np.asarray(rows, dtype=np.int64)
        return DatasetTable(self.features[rows], self.labels[rows], list(self.feature_names), self.origin)

    def with_features(self, features, names=None) -> "DatasetTable":
        return DatasetTable(features, self.labels.copy(),
                            list(self.feature_names if names is None else names), self.origin)


# -- parsing -------------------------------------------------------------------------

def _to_float(tok: str, missing: str, row: int) -> float:
    t = tok.strip()
    if t.lower() == missing:
        return math.nan
    try:
        v = float(t)
    except ValueError:
        raise ParseError(f"row {row}: unparseable value {tok!r}") from None
    return v


def _parse_aps(path: Path, missing: str, label_column: str) -> DatasetTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for line in reader:
            if line and line[0].strip() == label_column:
                header = [h.strip() for h in line]
                break
        if header is None:
            raise ParseError(f"{path}: no header line starting with {label_column!r}")
        width = len(header)
        labels, rows = [], []
        for i, line in enumerate(reader, start=1):
            if not line:
                continue
            if len(line) != width:
                raise ParseError(f"row {i}: expected {width} fields, got {len(line)}")
            lab = line[0].strip().lower()
            if lab == "neg":
                labels.append(0)
            elif lab == "pos":
                labels.append(1)
            else:
                raise ParseError(f"row {i}: unknown label token {line[0]!r}")
            rows.append([_to_float(t, missing, i) for t in line[1:]])
    origin = "aps_test" if "test" in path.name.lower() else "aps_train"
    feats = np.array(rows, dtype=np.float64).reshape(len(rows), width - 1)
    return DatasetTable(feats, np.array(labels), header[1:], origin)


def _parse_secom(path: Path, labels_path: Path, missing: str) -> DatasetTable:
    rows = []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            toks = line.split()
            if not toks:
                continue
            rows.append([_to_float(t, missing, i) for t in toks])
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        for i, r in enumerate(rows, start=1):
            if len(r) != len(rows[0]):
                raise ParseError(f"row {i}: expected {len(rows[0])} fields, got {len(r)}")
    labels = []
    with open(labels_path) as fh:
        for i, line in enumerate(fh, start=1):
            toks = line.split()
            if not toks:
                continue
            tok = toks[0].strip('"')
            if tok in ("-1", "-1.0"):
                labels.append(0)
            elif tok in ("1", "1.0"):
                labels.append(1)
            else:
                raise ParseError(f"labels row {i}: unknown label token {toks[0]!r}")
    if len(labels) != len(rows):
        raise ParseError(f"{labels_path}: {len(labels)} labels for {len(rows)} feature rows")
    d = len(rows[0]) if rows else 0
    names = [f"f{j:03d}" for j in range(d)]
    return DatasetTable(np.array(rows, dtype=np.float64).reshape(len(rows), d), np.array(labels), names, "secom")


def _parse_generic(path: Path, missing: str, label_column: str) -> DatasetTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if label_column not in header:
            raise ParseError(f"{path}: label column {label_column!r} not in header")
        li = header.index(label_column)
        names = [h for j, h in enumerate(header) if j != li]
        labels, rows = [], []
        for i, line in enumerate(reader, start=1):
            if not line:
                continue
            if len(line) != len(header):
                raise ParseError(f"row {i}: expected {len(header)} fields, got {len(line)}")
            tok = line[li].strip()
            try:
                lab = int(float(tok))
            except ValueError:
                lab = {"neg": 0, "pos": 1}.get(tok.lower(), -1)
            if lab not in (0, 1):
                raise ParseError(f"row {i}: unknown label token {tok!r}")
            labels.append(lab)
            rows.append([_to_float(t, missing, i) for j, t in enumerate(line) if j != li])
    feats = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return DatasetTable(feats, np.array(labels), names, "generic")


def parse_table(path, format: str = "generic_csv", missing_token: str | None = None,
                label_column: str = "class", labels_path=None) -> DatasetTable:
    """Read one of the supported raw layouts.

    ``secom_pair`` takes the features file as ``path`` and the labels file as
    ``labels_path``. Missing-token comparison ignores case.
    """
    path = Path(path)
    if format == "aps_csv":
        return _parse_aps(path, (missing_token or "na").lower(), label_column)
    if format == "secom_pair":
        if labels_path is None:
            raise ValueError("secom_pair needs labels_path")
        return _parse_secom(path, Path(labels_path), (missing_token or "nan").lower())
    if format == "generic_csv":
        return _parse_generic(path, (missing_token or "na").lower(), label_column)
    raise ValueError(f"unknown format {format!r}")


def write_table(table: DatasetTable, path, label_column: str = "class", missing_token: str = "na") -> None:
    """Write in the generic_csv layout; ``repr`` keeps floats round-trip exact."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([label_column, *table.feature_names])
        for lab, row in zip(table.labels, table.features):
            w.writerow([int(lab), *(missing_token if math.isnan(v) else repr(float(v)) for v in row)])


# -- splits --------------------------------------------------------------------------

@dataclass
class SplitPlan:
    kind: str
    folds: list[np.ndarray]
    seed: int
    fraction: float | None = None
    k: int | None = None
    meta: dict = field(default_factory=dict)

    def train_test(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        test = self.folds[i]
        train = np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != i]))
        return train, test


def _class_rows(labels: np.ndarray, rng: RngStream) -> list[np.ndarray]:
    return [rng.permutation(np.flatnonzero(labels == c)) for c in (0, 1)]


def stratified_holdout(table_or_labels, fraction: float, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Split rows into (kept, held) preserving class proportions."""
    labels = getattr(table_or_labels, "labels", table_or_labels)
    labels = np.asarray(labels)
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    kept, held = [], []
    for rows in _class_rows(labels, rng):
        if rows.size < 2:
            raise ValueError("each class needs at least 2 samples for a stratified holdout")
        n_held = int(round(fraction * rows.size))
        n_held = min(max(n_held, 1), rows.size - 1)
        held.append(rows[:n_held])
        kept.append(rows[n_held:])
    return np.sort(np.concatenate(kept)), np.sort(np.concatenate(held))


def stratified_kfold(table_or_labels, k: int, rng: RngStream) -> SplitPlan:
    """Partition rows into ``k`` folds; per-class counts differ by at most one."""
    labels = np.asarray(getattr(table_or_labels, "labels", table_or_labels))
    if k < 2:
        raise ValueError("K must be at least 2")
    buckets: list[list[np.ndarray]] = [[] for _ in range(k)]
    offset = 0
    for rows in _class_rows(labels, rng):
        if rows.size < k:
            raise ValueError(f"class with {rows.size} samples is smaller than K={k}")
        # rotate the start so remainders spread over different folds per class
        for j, chunk in enumerate(np.array_split(rows, k)):
            buckets[(j + offset) % k].append(chunk)
        offset += rows.size % k
    folds = [np.sort(np.concatenate(b)) for b in buckets]
    return SplitPlan("kfold", folds, rng.seed, k=k)


def class_counts(table_or_labels) -> tuple[int, int, float]:
    labels = np.asarray(getattr(table_or_labels, "labels", table_or_labels))
    pos = int((labels == 1).sum())
    neg = int((labels == 0).sum())
    return neg, pos, (neg / pos if pos else math.inf)

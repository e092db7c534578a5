"""End-to-end preprocessing: eliminate, impute, oversample, undersample, scale."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataio import DatasetTable, class_counts, write_table
from .impute import eliminate_features, iterative_impute
from .resample import ResampleReport, repeated_enn, svm_smote
from .rng import RngStream


class StageError(RuntimeError):
    def __init__(self, stage: str, err: Exception):
        super().__init__(f"stage {stage!r} failed: {err}")
        self.stage = stage


@dataclass
class ScalerParams:
    mins: np.ndarray
    maxs: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        return self.maxs == self.mins

    def to_dict(self) -> dict:
        return {"min": self.mins.tolist(), "max": self.maxs.tolist()}


def fit_minmax(table) -> ScalerParams:
    X = getattr(table, "features", table)
    X = np.asarray(X, dtype=np.float64)
    if np.isnan(X).any():
        raise ValueError("min-max scaling needs a fully imputed table")
    return ScalerParams(X.min(axis=0), X.max(axis=0))


def apply_minmax(table, params: ScalerParams):
    """(x - min) / (max - min); constant features map to 0, nothing is clipped."""
    X = np.asarray(getattr(table, "features", table), dtype=np.float64)
    span = params.maxs - params.mins
    safe = np.where(span == 0, 1.0, span)
    out = (X - params.mins) / safe
    out[:, params.degenerate] = 0.0
    if isinstance(table, DatasetTable):
        return table.with_features(out)
    return out


def inverse_minmax(X, params: ScalerParams) -> np.ndarray:
    return np.asarray(X) * (params.maxs - params.mins) + params.mins


@dataclass
class PipelineConfig:
    eliminate_threshold: float = 0.10
    impute_rounds: int = 5
    smote_ratio: float = 0.5
    smote_k: int = 5
    smote_C: float = 1.0
    enn_k: int = 3
    enn_max_iter: int = 100
    eliminate: bool = True
    oversample: bool = True
    undersample: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.enn_k % 2 == 0:
            # an even k allows neighbour-vote ties
            self.enn_k += 1


STAGES = ("eliminate", "impute", "oversample", "undersample", "scale")


@dataclass
class ProvenanceRecord:
    config: dict
    seed: int
    stages: list[dict] = field(default_factory=list)
    dropped_features: list[str] = field(default_factory=list)
    missing_fractions: dict = field(default_factory=dict)
    imputer: dict = field(default_factory=dict)
    scaler: dict = field(default_factory=dict)
    validation_split: str = ("10% stratified validation is carved from the processed training "
                             "table at train time")
    timings: dict = field(default_factory=dict)

    def to_dict(self, with_timings: bool = False) -> dict:
        d = asdict(self)
        if not with_timings:
            d.pop("timings")
        return d


def _shape_counts(t: DatasetTable) -> dict:
    neg, pos, _ = class_counts(t)
    return {"rows": t.n_rows, "features": t.n_features, "negative": neg, "positive": pos}


def run_preprocess(train: DatasetTable, test: DatasetTable, config: PipelineConfig
                   ) -> tuple[DatasetTable, DatasetTable, ProvenanceRecord, ResampleReport]:
    """Apply the five stages in order. Every transform is fitted on ``train``
    only; ``test`` is transformed but never resampled."""
    if train.feature_names != test.feature_names:
        raise ValueError("train and test tables must share the feature schema")
    prov = ProvenanceRecord(config=asdict(config), seed=config.seed)
    report = ResampleReport()
    rng = RngStream(config.seed, "resample")
    n_test = test.n_rows

    def stage(name, enabled, fn):
        nonlocal train, test
        entry = {"stage": name, "skipped": not enabled, "fitted_on": "train",
                 "train_in": _shape_counts(train), "test_in": _shape_counts(test)}
        t0 = time.perf_counter()
        if enabled:
            try:
                train, test = fn(train, test)
            except Exception as err:
                raise StageError(name, err) from err
        prov.timings[name] = time.perf_counter() - t0
        entry["train_out"] = _shape_counts(train)
        entry["test_out"] = _shape_counts(test)
        prov.stages.append(entry)

    def do_eliminate(tr, te):
        tr2, profile = eliminate_features(tr, config.eliminate_threshold)
        prov.dropped_features = [tr.feature_names[j] for j in profile.dropped]
        prov.missing_fractions = {n: float(f) for n, f in zip(tr.feature_names, profile.fractions)}
        return tr2, profile.apply(te)

    def do_impute(tr, te):
        tr2, model = iterative_impute(tr, config.impute_rounds)
        prov.imputer = model.provenance()
        return tr2, model.transform(te)

    def do_oversample(tr, te):
        tr2, _ = svm_smote(tr, config.smote_ratio, config.smote_k, config.smote_C, rng, report)
        return tr2, te

    def do_undersample(tr, te):
        tr2, _ = repeated_enn(tr, config.enn_k, config.enn_max_iter, report)
        return tr2, te

    def do_scale(tr, te):
        params = fit_minmax(tr)
        prov.scaler = params.to_dict()
        return apply_minmax(tr, params), apply_minmax(te, params)

    stage("eliminate", config.eliminate, do_eliminate)
    stage("impute", True, do_impute)
    neg, pos, _ = class_counts(train)
    report.before = {"negative": neg, "positive": pos}
    stage("oversample", config.oversample, do_oversample)
    report.smote_skipped = not config.oversample
    stage("undersample", config.undersample, do_undersample)
    report.enn_skipped = not config.undersample
    stage("scale", True, do_scale)
    assert test.n_rows == n_test
    return train, test, prov, report


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_processed(out_dir, train: DatasetTable, test: DatasetTable, prov: ProvenanceRecord,
                   report: ResampleReport) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_table(train, out / "train.csv")
    write_table(test, out / "test.csv")
    dump_json(prov.to_dict(), out / "provenance.json")
    dump_json({"config": prov.config, **report.to_dict()}, out / "resample_report.json")
    dump_json(prov.timings, out / "timings.json")
    return out

"""Confusion counts, derived ratios, and the asymmetric misclassification cost."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

RATIOS = ("accuracy", "precision", "sensitivity", "specificity", "f1",
          "npv", "fdr", "fpr", "fnr", "for_rate")
TEXT_COLUMNS = ("tp", "fp", "fn", "tn", *RATIOS[:5], "npv", "fp_cost", "fn_cost", "total_cost")


class Undefined:
    """Marker for a 0/0 ratio."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "UNDEFINED"

    def __bool__(self):
        return False


UNDEFINED = Undefined()


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: float
    fp: float
    fn: float
    tn: float

    @property
    def total(self) -> float:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(frozen=True)
class CostSpec:
    c_fp: float = 10.0
    c_fn: float = 500.0

    def __post_init__(self):
        if self.c_fp < 0 or self.c_fn < 0:
            raise ValueError("cost coefficients must be nonnegative")


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true).astype(np.int64).ravel()
    p = np.asarray(y_pred).astype(np.int64).ravel()
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.size} labels vs {p.size} predictions")
    return ConfusionMatrix(
        tp=float(np.sum((t == 1) & (p == 1))),
        fp=float(np.sum((t == 0) & (p == 1))),
        fn=float(np.sum((t == 1) & (p == 0))),
        tn=float(np.sum((t == 0) & (p == 0))),
    )


def _ratio(num: float, den: float):
    return UNDEFINED if den == 0 else num / den


def metric_suite(cm: ConfusionMatrix) -> dict:
    tp, fp, fn, tn = cm.tp, cm.fp, cm.fn, cm.tn
    return {
        "accuracy": _ratio(tp + tn, tp + tn + fp + fn),
        "precision": _ratio(tp, tp + fp),
        "sensitivity": _ratio(tp, tp + fn),
        "specificity": _ratio(tn, fp + tn),
        "f1": _ratio(2 * tp, 2 * tp + fp + fn),
        "npv": _ratio(tn, tn + fn),
        "fdr": _ratio(fp, fp + tp),
        "fpr": _ratio(fp, fp + tn),
        "fnr": _ratio(fn, fn + tp),
        "for_rate": _ratio(fn, fn + tn),
    }


def total_cost(cm: ConfusionMatrix, spec: CostSpec = CostSpec()) -> tuple[float, float, float]:
    fp_cost = spec.c_fp * cm.fp
    fn_cost = spec.c_fn * cm.fn
    return fp_cost, fn_cost, fp_cost + fn_cost


@dataclass
class MetricReport:
    confusion: ConfusionMatrix
    metrics: dict
    costs: tuple[float, float, float]
    dataset: str = ""
    seeds: tuple = ()
    label: str = ""

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "label": self.label,
            "seeds": list(self.seeds),
            "confusion": self.confusion.to_dict(),
            "metrics": {k: (None if v is UNDEFINED else v) for k, v in self.metrics.items()},
            "costs": {"fp": self.costs[0], "fn": self.costs[1], "total": self.costs[2]},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        cm = ConfusionMatrix(**d["confusion"])
        metrics = {k: (UNDEFINED if v is None else v) for k, v in d["metrics"].items()}
        c = d["costs"]
        return cls(cm, metrics, (c["fp"], c["fn"], c["total"]), d.get("dataset", ""),
                   tuple(d.get("seeds", ())), d.get("label", ""))


def evaluate(cm: ConfusionMatrix, spec: CostSpec = CostSpec(), **meta) -> MetricReport:
    return MetricReport(cm, metric_suite(cm), total_cost(cm, spec), **meta)


def average_confusion(cms) -> ConfusionMatrix:
    cms = list(cms)
    n = len(cms)
    if not n:
        raise ValueError("nothing to average")
    return ConfusionMatrix(*(sum(getattr(c, f) for c in cms) / n for f in ("tp", "fp", "fn", "tn")))


def _fmt(v, ratio: bool) -> str:
    if v is UNDEFINED or v is None:
        return "undef"
    if ratio:
        return f"{v:.4f}"
    if float(v).is_integer():
        return str(int(v))
    return f"{v:.4f}".rstrip("0")


def render_report(reports, format: str = "json") -> str:
    reports = list(reports)
    if not reports:
        raise ValueError("render_report needs at least one report")
    if format == "json":
        return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)
    if format != "text_table":
        raise ValueError(f"unknown format {format!r}")
    header = ["label", *TEXT_COLUMNS]
    rows = [header]
    for r in reports:
        d = r.to_dict()
        vals = {**d["confusion"], **r.metrics,
                "fp_cost": r.costs[0], "fn_cost": r.costs[1], "total_cost": r.costs[2]}
        rows.append([r.label or r.dataset or "-", *(_fmt(vals[c], c in RATIOS) for c in TEXT_COLUMNS)])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in rows)

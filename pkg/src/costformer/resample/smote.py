"""SVM-guided SMOTE oversampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataio import DatasetTable, class_counts
from ..rng import RngStream
from .knn import NeighborIndex, standardize
from .svm import fit_linear_svm


@dataclass
class ResampleReport:
    before: dict = field(default_factory=dict)
    after_smote: dict = field(default_factory=dict)
    after_enn: dict = field(default_factory=dict)
    synthetic: int = 0
    generators: int = 0
    generator_source: str = ""
    svm: dict = field(default_factory=dict)
    enn_passes: int = 0
    enn_removed: list[int] = field(default_factory=list)
    stop_reason: str = ""
    smote_skipped: bool = False
    enn_skipped: bool = False

    def to_dict(self) -> dict:
        return {
            "before": self.before,
            "after_smote": self.after_smote,
            "after_enn": self.after_enn,
            "synthetic": self.synthetic,
            "generators": self.generators,
            "generator_source": self.generator_source,
            "svm": self.svm,
            "enn_passes": self.enn_passes,
            "enn_removed": self.enn_removed,
            "stop_reason": self.stop_reason,
            "smote_skipped": self.smote_skipped,
            "enn_skipped": self.enn_skipped,
        }


def _counts(labels) -> dict:
    neg, pos, _ = class_counts(labels)
    return {"negative": neg, "positive": pos}


def svm_smote(table: DatasetTable, target_minority_ratio: float = 0.5, k: int = 5, C: float = 1.0,
              rng: RngStream | None = None, report: ResampleReport | None = None,
              beta_fn=None) -> tuple[DatasetTable, ResampleReport]:
    """Append synthetic positives ``s = x + beta (x' - x)`` until the positive
    count reaches ``round(target_minority_ratio * negatives)``.

    Generators are the positive support vectors of a linear SVM fitted on
    z-standardised features, visited round-robin; neighbours ``x'`` are drawn
    from each generator's ``k`` nearest positives. ``beta_fn(rng, size)``
    overrides the uniform draw of beta on [0, 1].
    """
    if rng is None:
        raise ValueError("svm_smote needs an RngStream")
    report = report or ResampleReport()
    X = table.features
    y = table.labels
    if np.isnan(X).any():
        raise ValueError("svm_smote needs a fully imputed table")
    report.before = _counts(y)
    pos_rows = np.flatnonzero(y == 1)
    n_pos, n_neg = pos_rows.size, int((y == 0).sum())
    if n_pos < 2:
        raise ValueError(f"minority class has {n_pos} samples; SMOTE needs at least 2")
    target = int(round(target_minority_ratio * n_neg))
    if not 0.0 < target_minority_ratio <= 1.0 or target < n_pos:
        raise ValueError(
            f"target ratio {target_minority_ratio} gives {target} positives, fewer than the {n_pos} present")
    n_new = target - n_pos

    Z = standardize(X)
    svm = fit_linear_svm(Z, np.where(y == 1, 1.0, -1.0), C)
    sv = svm.support
    gens = np.intersect1d(sv, pos_rows)
    report.svm = {"support_vectors": int(sv.size), "sweeps": svm.sweeps,
                  "violation": svm.violation, "converged": svm.converged}
    if gens.size == 0:
        gens = pos_rows
        report.generator_source = "all_minority"
    else:
        report.generator_source = "minority_support_vectors"
    report.generators = int(gens.size)

    kk = min(k, n_pos - 1)
    index = NeighborIndex(Z[pos_rows])
    pos_pos = {int(r): i for i, r in enumerate(pos_rows)}
    gen_local = np.array([pos_pos[int(g)] for g in gens])
    neigh = index.query(Z[gens], kk, gen_local)

    src = np.arange(n_new) % gens.size
    pick = rng.integers(0, kk, size=n_new)
    beta = rng.uniform(0.0, 1.0, size=n_new) if beta_fn is None else np.asarray(beta_fn(rng, n_new), dtype=float)
    base = X[gens[src]]
    mate = X[pos_rows[neigh[src, pick]]]
    synth = base + beta[:, None] * (mate - base)

    out = DatasetTable(np.vstack([X, synth]), np.concatenate([y, np.ones(n_new, dtype=np.int64)]),
                       list(table.feature_names), table.origin)
    report.synthetic = int(n_new)
    report.after_smote = _counts(out.labels)
    return out, report

"""Edited-nearest-neighbour cleaning of the majority class."""

from __future__ import annotations

import numpy as np

from ..dataio import DatasetTable
from .knn import NeighborIndex, standardize
from .smote import ResampleReport, _counts


def enn_marks(X: np.ndarray, y: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of majority (label 0) rows outvoted by their neighbours."""
    if k % 2 == 0:
        raise ValueError("ENN k must be odd")
    if k >= len(y):
        raise ValueError(f"k={k} must be smaller than the table size {len(y)}")
    cand = np.flatnonzero(y == 0)
    marks = np.zeros(len(y), dtype=bool)
    if cand.size == 0:
        return marks
    index = NeighborIndex(standardize(X))
    neigh = index.query(index.ref[cand], k, cand)
    disagree = (y[neigh] != 0).sum(axis=1)
    marks[cand[disagree > k / 2]] = True
    return marks


def enn_pass(table: DatasetTable, k: int = 3) -> tuple[DatasetTable, int]:
    """One simultaneous mark-then-sweep pass over the majority rows."""
    if len(np.unique(table.labels)) < 2:
        raise ValueError("ENN needs both classes present")
    marks = enn_marks(table.features, table.labels, k)
    return table.take(np.flatnonzero(~marks)), int(marks.sum())


def repeated_enn(table: DatasetTable, k: int = 3, max_iter: int = 100,
                 report: ResampleReport | None = None) -> tuple[DatasetTable, ResampleReport]:
    """Repeat :func:`enn_pass` until nothing is removed, ``max_iter`` passes
    run, or the majority class stops outnumbering the minority."""
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    report = report or ResampleReport()
    if not report.before:
        report.before = _counts(table.labels)
    reason = "max_iter"
    passes = 0
    removed: list[int] = []
    while passes < max_iter:
        table, n_removed = enn_pass(table, k)
        passes += 1
        removed.append(n_removed)
        if n_removed == 0:
            reason = "converged"
            break
        n_pos = int((table.labels == 1).sum())
        n_neg = int((table.labels == 0).sum())
        if n_neg < n_pos:
            reason = "class_flip"
            break
    report.enn_passes = passes
    report.enn_removed = removed
    report.stop_reason = reason
    report.after_enn = _counts(table.labels)
    return table, report

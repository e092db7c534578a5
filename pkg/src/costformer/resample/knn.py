"""Exact k-nearest-neighbour search under squared Euclidean distance."""

from __future__ import annotations

import numpy as np

_MARGIN = 8
_BLOCK = 1024


def standardize(X: np.ndarray) -> np.ndarray:
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - mu) / sd


class NeighborIndex:
    """Brute-force index over ``ref`` rows.

    Candidates come from the BLAS expansion |a|^2 + |b|^2 - 2ab; the final
    ordering recomputes exact squared differences so that ties (including
    duplicated rows) resolve by reference index.
    """

    def __init__(self, ref: np.ndarray, *, standardized: bool = False):
        ref = np.asarray(ref, dtype=np.float64)
        self.standardized = standardized
        if standardized:
            mu = ref.mean(axis=0)
            sd = ref.std(axis=0)
            sd[sd == 0] = 1.0
            self._mu, self._sd = mu, sd
            ref = (ref - mu) / sd
        self.ref = np.ascontiguousarray(ref)
        self._sq = np.einsum("ij,ij->i", self.ref, self.ref)

    def __len__(self):
        return self.ref.shape[0]

    def _map(self, Q):
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if self.standardized:
            Q = (Q - self._mu) / self._sd
        return Q

    def query(self, Q, k: int, self_rows=None) -> np.ndarray:
        """Indices of the ``k`` nearest references for each query row.

        ``self_rows[i]`` (a reference index or -1) is excluded from the
        neighbours of query ``i``.
        """
        Q = self._map(Q)
        n_ref = len(self)
        exclude = self_rows is not None
        if k < 1 or k > n_ref - (1 if exclude else 0):
            raise ValueError(f"k={k} too large for {n_ref} reference points")
        if exclude:
            self_rows = np.asarray(self_rows, dtype=np.int64)
        out = np.empty((Q.shape[0], k), dtype=np.int64)
        m = min(n_ref, k + _MARGIN + (1 if exclude else 0))
        for s in range(0, Q.shape[0], _BLOCK):
            q = Q[s:s + _BLOCK]
            approx = np.einsum("ij,ij->i", q, q)[:, None] + self._sq[None, :] - 2.0 * (q @ self.ref.T)
            if exclude:
                sr = self_rows[s:s + _BLOCK]
                has = sr >= 0
                approx[np.flatnonzero(has), sr[has]] = np.inf
            if m < n_ref:
                cand = np.argpartition(approx, m - 1, axis=1)[:, :m]
                # widen to every reference within the candidate radius so rounding can't drop a true neighbour
                radius = np.take_along_axis(approx, cand, axis=1).max(axis=1)
                slack = 1e-9 * (np.abs(radius) + self._sq.max() + 1.0)
            else:
                cand = None
            for r in range(q.shape[0]):
                if cand is None:
                    idx = np.arange(n_ref)
                else:
                    idx = np.flatnonzero(approx[r] <= radius[r] + slack[r])
                if exclude and self_rows[s + r] >= 0:
                    idx = idx[idx != self_rows[s + r]]
                diff = self.ref[idx] - q[r]
                dist = np.einsum("ij,ij->i", diff, diff)
                order = np.lexsort((idx, dist))[:k]
                out[s + r] = idx[order]
        return out


def knn_query(index: NeighborIndex, point, k: int, exclude_self: int | None = None) -> np.ndarray:
    """Single-point convenience wrapper; ``exclude_self`` is the reference row to skip."""
    rows = None if exclude_self is None else [exclude_self]
    return index.query(np.atleast_2d(point), k, rows)[0]

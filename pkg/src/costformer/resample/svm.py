"""Linear soft-margin SVM fitted in the dual by coordinate descent."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    dual: np.ndarray
    C: float
    sweeps: int = 0
    violation: float = 0.0
    converged: bool = True

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.dual > 1e-8)

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias


def fit_linear_svm(X, y, C: float = 1.0, *, max_iter: int = 1000, tol: float = 1e-3) -> LinearSvmModel:
    """L1-loss dual coordinate descent; the bias is the weight on an appended
    constant-1 feature. Labels must be -1/+1."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if C <= 0:
        raise ValueError("C must be positive")
    if not (np.any(y == 1) and np.any(y == -1)) or not np.isin(y, (-1.0, 1.0)).all():
        raise ValueError("y must contain both -1 and +1 and nothing else")
    Xa = np.ascontiguousarray(np.hstack([X, np.ones((X.shape[0], 1))]))
    alpha = np.zeros(X.shape[0])
    w = np.zeros(Xa.shape[1])
    sweeps, viol = _backend.dual_cd(Xa, np.ascontiguousarray(y), alpha, w, float(C), int(max_iter), float(tol))
    converged = viol < tol
    if not converged:
        warnings.warn(f"dual coordinate descent stopped after {sweeps} sweeps, violation {viol:.3g}",
                      ConvergenceWarning, stacklevel=2)
    return LinearSvmModel(w[:-1].copy(), float(w[-1]), alpha, float(C), int(sweeps), float(viol), converged)


def dual_objective(model_or_alpha, X, y) -> float:
    """0.5 a'Qa - sum(a) with Q over the bias-augmented features."""
    alpha = getattr(model_or_alpha, "dual", model_or_alpha)
    Xa = np.hstack([np.asarray(X, dtype=np.float64), np.ones((len(X), 1))])
    v = (alpha * np.asarray(y, dtype=np.float64)) @ Xa
    return 0.5 * float(v @ v) - float(np.sum(alpha))

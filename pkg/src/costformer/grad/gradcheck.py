"""Central finite-difference checks against the reverse-mode gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Graph, Tensor, backward


def analytic_grads(loss_fn: Callable[[], Tensor], params: list[Tensor]) -> list[np.ndarray]:
    with Graph() as g:
        for p in params:
            g.param(p)
        loss = loss_fn()
    grads = backward(g, loss)
    return [grads[p] for p in params]


def numeric_grad(loss_fn: Callable[[], Tensor], param: Tensor, h: float) -> np.ndarray:
    flat = param.data.reshape(-1)
    out = np.empty_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(loss_fn().data)
        flat[i] = orig - h
        fm = float(loss_fn().data)
        flat[i] = orig
        out[i] = (fp - fm) / (2.0 * h)
    return out.reshape(param.shape)


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))


def finite_difference_check(loss_fn: Callable[[], Tensor], param: Tensor, h: float = 1e-6) -> float:
    """Max over coordinates of |analytic - central| / max(1, |analytic|).

    ``loss_fn`` rebuilds the scalar loss from current parameter values on
    every call; ``param.data`` is perturbed in place and restored.
    """
    if not 0 < h <= 1e-3:
        raise ValueError(f"step h must be in (0, 1e-3], got {h}")
    if not param.data.flags.writeable or not param.data.flags.c_contiguous:
        param.data = np.ascontiguousarray(param.data).copy()
    (a,) = analytic_grads(loss_fn, [param])
    n = numeric_grad(loss_fn, param, h)
    return max_rel_error(a, n)

"""Differentiable primitives.

Each primitive is a forward/backward pair registered by name, so that the
backward rule is looked up when the tape is replayed.
"""

from __future__ import annotations

import numpy as np

from ..rng import RngStream
from .tensor import NonFiniteError, ShapeError, Tensor, apply, as_tensor, register

LAYER_NORM_EPS = 1e-6


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# -- elementwise arithmetic ---------------------------------------------------

def _add_fwd(a, b):
    return a + b, (a.shape, b.shape)


def _add_bwd(ctx, g):
    sa, sb = ctx
    return _unbroadcast(g, sa), _unbroadcast(g, sb)


def _sub_fwd(a, b):
    return a - b, (a.shape, b.shape)


def _sub_bwd(ctx, g):
    sa, sb = ctx
    return _unbroadcast(g, sa), -_unbroadcast(g, sb)


def _mul_fwd(a, b):
    return a * b, (a, b)


def _mul_bwd(ctx, g):
    a, b = ctx
    return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)


def _scale_fwd(a, *, c):
    return a * c, c


def _scale_bwd(c, g):
    return (g * c,)


register("add", _add_fwd, _add_bwd)
register("sub", _sub_fwd, _sub_bwd)
register("mul", _mul_fwd, _mul_bwd)
register("scale", _scale_fwd, _scale_bwd)


def add(a: Tensor, b: Tensor) -> Tensor:
    return apply("add", a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return apply("sub", a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return apply("mul", a, b)


def scale(a: Tensor, c: float) -> Tensor:
    return apply("scale", a, c=float(c))


# -- linear algebra -------------------------------------------------------------

def _matmul_fwd(a, b):
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    return np.matmul(a, b), (a, b)


def _matmul_bwd(ctx, g):
    a, b = ctx
    ga = np.matmul(g, np.swapaxes(b, -1, -2))
    gb = np.matmul(np.swapaxes(a, -1, -2), g)
    return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)


register("matmul", _matmul_fwd, _matmul_bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return apply("matmul", a, b)


def _affine_fwd(x, W, b):
    if W.ndim != 2 or b.shape != (W.shape[1],) or x.ndim < 1 or x.shape[-1] != W.shape[0]:
        raise ShapeError(f"affine_map shape mismatch: x{x.shape}, W{W.shape}, b{b.shape}")
    return x @ W + b, (x, W)


def _affine_bwd(ctx, g):
    x, W = ctx
    gx = g @ W.T
    g2 = g.reshape(-1, g.shape[-1])
    gW = x.reshape(-1, x.shape[-1]).T @ g2
    gb = g2.sum(axis=0)
    return gx, gW, gb


register("affine_map", _affine_fwd, _affine_bwd)


def affine_map(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """``x @ W + b`` over the last axis of ``x``."""
    return apply("affine_map", x, W, b)


# -- shape manipulation ---------------------------------------------------------

def _reshape_fwd(x, *, shape):
    return x.reshape(shape), x.shape


def _reshape_bwd(shape, g):
    return (g.reshape(shape),)


def _transpose_fwd(x, *, axes):
    return np.transpose(x, axes), axes


def _transpose_bwd(axes, g):
    return (np.transpose(g, np.argsort(axes)),)


register("reshape", _reshape_fwd, _reshape_bwd)
register("transpose", _transpose_fwd, _transpose_bwd)


def reshape(x: Tensor, shape) -> Tensor:
    return apply("reshape", x, shape=tuple(shape))


def transpose(x: Tensor, axes) -> Tensor:
    return apply("transpose", x, axes=tuple(axes))


# -- activations ------------------------------------------------------------------

def _relu_fwd(x):
    mask = x > 0
    return np.where(mask, x, 0.0), mask


def _relu_bwd(mask, g):
    return (g * mask,)


def _sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _sigmoid_fwd(x):
    s = _sigmoid(x)
    return s, s


def _sigmoid_bwd(s, g):
    return (g * s * (1.0 - s),)


def _softmax_fwd(x):
    if x.ndim == 0 or x.shape[-1] < 1:
        raise ShapeError(f"softmax needs a non-empty last axis, got {x.shape}")
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)
    return s, s


def _softmax_bwd(s, g):
    return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)


register("relu", _relu_fwd, _relu_bwd)
register("sigmoid", _sigmoid_fwd, _sigmoid_bwd)
register("softmax", _softmax_fwd, _softmax_bwd)

_ACTIVATIONS = {"relu": "relu", "sigmoid": "sigmoid", "softmax_last_axis": "softmax", "softmax": "softmax"}


def activation(kind: str, x: Tensor) -> Tensor:
    try:
        prim = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None
    if not np.all(np.isfinite(x.data)):
        raise NonFiniteError(f"{kind}: non-finite input")
    return apply(prim, x)


def relu(x: Tensor) -> Tensor:
    return apply("relu", x)


def sigmoid(x: Tensor) -> Tensor:
    return apply("sigmoid", x)


def softmax(x: Tensor) -> Tensor:
    return apply("softmax", x)


# -- normalisation ----------------------------------------------------------------

def _layer_norm_fwd(x, gain, shift, *, eps):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    return gain * xhat + shift, (xhat, inv, gain)


def _layer_norm_bwd(ctx, g):
    xhat, inv, gain = ctx
    c = xhat.shape[-1]
    lead = tuple(range(g.ndim - 1))
    ggain = (g * xhat).sum(axis=lead)
    gshift = g.sum(axis=lead)
    gx_hat = g * gain
    gx = inv * (gx_hat - gx_hat.mean(axis=-1, keepdims=True)
                - xhat * (gx_hat * xhat).sum(axis=-1, keepdims=True) / c)
    return gx, ggain, gshift


register("layer_norm", _layer_norm_fwd, _layer_norm_bwd)


def layer_norm(x: Tensor, gain: Tensor, shift: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    if eps <= 0:
        raise ValueError("layer_norm eps must be positive")
    return apply("layer_norm", x, gain, shift, eps=float(eps))


# -- dropout ------------------------------------------------------------------------

def _dropout_fwd(x, *, mask):
    return x * mask, mask


def _dropout_bwd(mask, g):
    return (g * mask,)


register("dropout", _dropout_fwd, _dropout_bwd)


def dropout(x: Tensor, p: float, rng: RngStream | None, training: bool) -> Tensor:
    """Inverted dropout; identity when ``p == 0`` or not training."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    keep = rng.random(x.shape) >= p
    return apply("dropout", x, mask=keep / (1.0 - p))


# -- reductions -----------------------------------------------------------------------

def _mean_axis_fwd(x, *, axis):
    return x.mean(axis=axis), (x.shape, axis)


def _mean_axis_bwd(ctx, g):
    shape, axis = ctx
    return (np.broadcast_to(np.expand_dims(g, axis) / shape[axis], shape).copy(),)


def _sum_fwd(x):
    return np.asarray(x.sum()), x.shape


def _sum_bwd(shape, g):
    return (np.broadcast_to(g, shape).copy(),)


def _mean_fwd(x):
    return np.asarray(x.mean()), x.shape


def _mean_bwd(shape, g):
    return (np.broadcast_to(g / int(np.prod(shape)), shape).copy(),)


register("reduce_mean_axis", _mean_axis_fwd, _mean_axis_bwd)
register("sum", _sum_fwd, _sum_bwd)
register("mean", _mean_fwd, _mean_bwd)


def reduce_mean_axis(x: Tensor, axis: int) -> Tensor:
    nd = x.ndim
    if not -nd <= axis < nd:
        raise ShapeError(f"axis {axis} out of range for shape {x.shape}")
    return apply("reduce_mean_axis", x, axis=axis % nd)


def sum_all(x: Tensor) -> Tensor:
    return apply("sum", x)


def mean_all(x: Tensor) -> Tensor:
    return apply("mean", x)


__all__ = [
    "LAYER_NORM_EPS", "activation", "add", "affine_map", "as_tensor", "dropout",
    "layer_norm", "matmul", "mean_all", "mul", "reduce_mean_axis", "relu", "reshape",
    "scale", "sigmoid", "softmax", "sub", "sum_all", "transpose",
]

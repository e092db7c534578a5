"""Transformer-encoder classifier over a sequence of 1-channel feature tokens."""

from __future__ import annotations

import math

import numpy as np

from ..grad import ops
from ..grad.init import glorot_uniform_init
from ..grad.tensor import NonFiniteError, ShapeError, Tensor
from ..rng import RngStream
from .config import TransformerConfig


def param_shapes(cfg: TransformerConfig) -> dict[str, tuple[int, ...]]:
    hd = cfg.n_heads * cfg.head_size
    shapes: dict[str, tuple[int, ...]] = {}
    for i in range(cfg.n_blocks):
        b = f"block{i}"
        shapes.update({
            f"{b}.ln1.gain": (1,), f"{b}.ln1.shift": (1,),
            f"{b}.attn.wq": (1, hd), f"{b}.attn.bq": (hd,),
            f"{b}.attn.wk": (1, hd), f"{b}.attn.bk": (hd,),
            f"{b}.attn.wv": (1, hd), f"{b}.attn.bv": (hd,),
            f"{b}.attn.wo": (hd, 1), f"{b}.attn.bo": (1,),
            f"{b}.ln2.gain": (1,), f"{b}.ln2.shift": (1,),
            f"{b}.ff1.w": (1, cfg.ff_filters), f"{b}.ff1.b": (cfg.ff_filters,),
            f"{b}.ff2.w": (cfg.ff_filters, 1), f"{b}.ff2.b": (1,),
        })
    m1, m2 = cfg.mlp_units
    shapes.update({
        "head.dense1.w": (cfg.input_dim, m1), "head.dense1.b": (m1,),
        "head.dense2.w": (m1, m2), "head.dense2.b": (m2,),
        "head.out.w": (m2, 1), "head.out.b": (1,),
    })
    return shapes


def param_count(cfg: TransformerConfig) -> int:
    return sum(int(np.prod(s)) for s in param_shapes(cfg).values())


def init_params(cfg: TransformerConfig, rng: RngStream) -> dict[str, Tensor]:
    """Glorot-uniform matrices, zero biases, unit gains, zero shifts."""
    params = {}
    for name, shape in param_shapes(cfg).items():
        leaf = name.rsplit(".", 1)[1]
        if leaf == "gain":
            data = np.ones(shape)
        elif len(shape) == 2:
            data = glorot_uniform_init(shape, rng)
        else:
            data = np.zeros(shape)
        params[name] = Tensor(data, requires_grad=True, name=name)
    return params


# Attend over one token when every token of a row is identical. Scores then
# tie and each query's context is the shared value, so the result matches
# full attention at O(D) cost. Layer norm over 1-channel tokens always
# produces this case. Set False to force the quadratic path.
SHARED_TOKEN_SHORTCUT = True


def _token_invariant(u: Tensor) -> bool:
    d = u.data
    return d.shape[1] > 1 and bool(np.array_equal(d, np.broadcast_to(d[:, :1], d.shape)))


def _attention(u: Tensor, p: dict, pre: str, cfg: TransformerConfig) -> Tensor:
    B, D, C = u.shape
    if SHARED_TOKEN_SHORTCUT and _token_invariant(u):
        one = ops.reshape(ops.reduce_mean_axis(u, axis=1), (B, 1, C))
        out = _attention(one, p, pre, cfg)
        return ops.mul(out, Tensor(np.ones((1, D, 1))))
    H, dk = cfg.n_heads, cfg.head_size

    def heads(w, b):
        t = ops.affine_map(u, p[f"{pre}.{w}"], p[f"{pre}.{b}"])
        return ops.transpose(ops.reshape(t, (B, D, H, dk)), (0, 2, 1, 3))

    q, k, v = heads("wq", "bq"), heads("wk", "bk"), heads("wv", "bv")
    scores = ops.scale(ops.matmul(q, ops.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dk))
    ctx = ops.matmul(ops.softmax(scores), v)
    ctx = ops.reshape(ops.transpose(ctx, (0, 2, 1, 3)), (B, D, H * dk))
    return ops.affine_map(ctx, p[f"{pre}.wo"], p[f"{pre}.bo"])


def _block(x: Tensor, p: dict, i: int, cfg: TransformerConfig, rng, training: bool) -> Tensor:
    b = f"block{i}"
    u = ops.layer_norm(x, p[f"{b}.ln1.gain"], p[f"{b}.ln1.shift"], cfg.ln_eps)
    att = ops.dropout(_attention(u, p, f"{b}.attn", cfg), cfg.enc_dropout, rng, training)
    r = ops.add(x, att)
    z = ops.layer_norm(r, p[f"{b}.ln2.gain"], p[f"{b}.ln2.shift"], cfg.ln_eps)
    f = ops.relu(ops.affine_map(z, p[f"{b}.ff1.w"], p[f"{b}.ff1.b"]))
    f = ops.dropout(f, cfg.enc_dropout, rng, training)
    f = ops.affine_map(f, p[f"{b}.ff2.w"], p[f"{b}.ff2.b"])
    return ops.add(r, f)


def model_forward(params: dict[str, Tensor], cfg: TransformerConfig, batch,
                  rng: RngStream | None = None, training: bool = False) -> Tensor:
    """Positive-class probability for each row of ``batch`` ([B, D])."""
    x = batch if isinstance(batch, Tensor) else Tensor(batch)
    if x.ndim != 2 or x.shape[1] != cfg.input_dim:
        raise ShapeError(f"batch width {x.shape[-1] if x.ndim else None} != input_dim {cfg.input_dim}")
    if training and rng is None and (cfg.enc_dropout > 0 or cfg.mlp_dropout > 0):
        raise ValueError("training mode with dropout needs an RngStream")
    B, D = x.shape
    h = ops.reshape(x, (B, D, 1))
    for i in range(cfg.n_blocks):
        try:
            h = _block(h, params, i, cfg, rng, training)
        except NonFiniteError as err:
            raise NonFiniteError(f"block {i}: {err}") from err
    pooled = ops.reduce_mean_axis(h, axis=2)
    z = ops.relu(ops.affine_map(pooled, params["head.dense1.w"], params["head.dense1.b"]))
    z = ops.dropout(z, cfg.mlp_dropout, rng, training)
    z = ops.relu(ops.affine_map(z, params["head.dense2.w"], params["head.dense2.b"]))
    z = ops.dropout(z, cfg.mlp_dropout, rng, training)
    out = ops.sigmoid(ops.affine_map(z, params["head.out.w"], params["head.out.b"]))
    return ops.reshape(out, (B,))


def predict_proba(params, cfg: TransformerConfig, X, batch_size: int = 512) -> np.ndarray:
    X = np.asarray(getattr(X, "features", X), dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != cfg.input_dim:
        raise ShapeError(f"table width {X.shape[-1]} != input_dim {cfg.input_dim}")
    out = [model_forward(params, cfg, X[s:s + batch_size]).data for s in range(0, X.shape[0], batch_size)]
    return np.concatenate(out) if out else np.empty(0)


def predict(params, cfg: TransformerConfig, table, threshold: float = 0.5) -> np.ndarray:
    """1 where the positive probability reaches ``threshold``; dropout off."""
    return (predict_proba(params, cfg, table) >= threshold).astype(np.int64)

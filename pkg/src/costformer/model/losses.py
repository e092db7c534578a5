"""Binary cross entropy and binary focal loss on probabilities."""

from __future__ import annotations

import numpy as np

from ..grad.tensor import Tensor, apply, register

CLAMP = 1e-7


def _prep(p, y):
    pc = np.clip(p, CLAMP, 1.0 - CLAMP)
    inside = (p >= CLAMP) & (p <= 1.0 - CLAMP)
    return pc, inside, np.asarray(y, dtype=np.float64)


def _focal_terms(pc, y, alpha, gamma):
    lp, lq = np.log(pc), np.log1p(-pc)
    q = 1.0 - pc
    loss = -y * alpha * q ** gamma * lp - (1.0 - y) * (1.0 - alpha) * pc ** gamma * lq
    if gamma == 0:
        dpos = -alpha / pc
        dneg = (1.0 - alpha) / q
    else:
        dpos = alpha * gamma * q ** (gamma - 1.0) * lp - alpha * q ** gamma / pc
        dneg = -(1.0 - alpha) * gamma * pc ** (gamma - 1.0) * lq + (1.0 - alpha) * pc ** gamma / q
    return loss, y * dpos + (1.0 - y) * dneg


def _focal_fwd(p, *, y, alpha, gamma):
    pc, inside, y = _prep(p, y)
    loss, dl = _focal_terms(pc, y, alpha, gamma)
    return np.asarray(loss.mean()), (dl * inside, p.size)


def _ce_fwd(p, *, y):
    pc, inside, y = _prep(p, y)
    loss = -y * np.log(pc) - (1.0 - y) * np.log1p(-pc)
    dl = -y / pc + (1.0 - y) / (1.0 - pc)
    return np.asarray(loss.mean()), (dl * inside, p.size)


def _mean_loss_bwd(ctx, g):
    dl, n = ctx
    return (g * dl / n,)


register("focal_loss", _focal_fwd, _mean_loss_bwd)
register("cross_entropy", _ce_fwd, _mean_loss_bwd)


def focal_loss(p: Tensor, y, alpha: float = 0.95, gamma: float = 1.5) -> Tensor:
    """Mean of -y a (1-p)^g log p - (1-y)(1-a) p^g log(1-p), p clamped to [1e-7, 1-1e-7]."""
    if not isinstance(p, Tensor):
        p = Tensor(p)
    return apply("focal_loss", p, y=np.asarray(y, dtype=np.float64).reshape(p.shape),
                 alpha=float(alpha), gamma=float(gamma))


def cross_entropy_loss(p: Tensor, y) -> Tensor:
    if not isinstance(p, Tensor):
        p = Tensor(p)
    return apply("cross_entropy", p, y=np.asarray(y, dtype=np.float64).reshape(p.shape))


def loss_fn(cfg):
    if cfg.kind == "focal":
        return lambda p, y: focal_loss(p, y, cfg.alpha, cfg.gamma)
    return cross_entropy_loss

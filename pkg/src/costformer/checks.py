"""Finite-difference gradient suites over every primitive and the full model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grad import ops
from .grad.gradcheck import finite_difference_check
from .grad.tensor import Tensor, apply
from .model.config import TransformerConfig
from .model.losses import cross_entropy_loss, focal_loss
from .model.transformer import init_params, model_forward
from .rng import RngStream

PRIMITIVE_TOL = 1e-5
MODEL_TOL = 1e-4
DESK_CHECK_CONFIG = TransformerConfig(input_dim=6, n_blocks=1, n_heads=2, head_size=16, ff_filters=4,
                                      enc_dropout=0.0, mlp_units=(32, 16), mlp_dropout=0.0)


@dataclass
class CheckResult:
    name: str
    error: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.error <= self.tol


def _t(gen, *shape, away_from_zero=False) -> Tensor:
    x = gen.standard_normal(shape)
    if away_from_zero:
        # keep relu inputs clear of the kink
        x = np.where(np.abs(x) < 0.05, 0.05 * np.sign(x) + 0.05 * (x == 0), x)
    return Tensor(x, requires_grad=True)


def _weighted(out: Tensor, w: np.ndarray) -> Tensor:
    return ops.sum_all(ops.mul(out, Tensor(w)))


def _cases(gen):
    """(name, list of leaf tensors, output builder) triples for one random instance."""
    a, b = _t(gen, 3, 4), _t(gen, 3, 4)
    m1, m2 = _t(gen, 2, 3, 4), _t(gen, 4, 5)
    x, W, bias = _t(gen, 2, 3, 4), _t(gen, 4, 3), _t(gen, 3)
    r = _t(gen, 3, 5, away_from_zero=True)
    ln_x, ln_g, ln_b = _t(gen, 2, 5), _t(gen, 5), _t(gen, 5)
    mask = (gen.random((3, 4)) >= 0.3) / 0.7
    p = Tensor(gen.uniform(0.05, 0.95, 6), requires_grad=True)
    y = gen.integers(0, 2, 6)
    alpha, gamma = gen.uniform(0.1, 0.9), gen.choice([0.0, 0.5, 1.5, 2.0])
    return [
        ("add", [a, b], lambda: ops.add(a, b)),
        ("sub", [a, b], lambda: ops.sub(a, b)),
        ("mul", [a, b], lambda: ops.mul(a, b)),
        ("scale", [a], lambda: ops.scale(a, 1.7)),
        ("matmul", [m1, m2], lambda: ops.matmul(m1, m2)),
        ("affine_map", [x, W, bias], lambda: ops.affine_map(x, W, bias)),
        ("reshape", [a], lambda: ops.reshape(a, (2, 6))),
        ("transpose", [m1], lambda: ops.transpose(m1, (2, 0, 1))),
        ("relu", [r], lambda: ops.relu(r)),
        ("sigmoid", [a], lambda: ops.sigmoid(a)),
        ("softmax", [a], lambda: ops.softmax(a)),
        ("layer_norm", [ln_x, ln_g, ln_b], lambda: ops.layer_norm(ln_x, ln_g, ln_b)),
        ("dropout", [a], lambda: _fixed_dropout(a, mask)),
        ("reduce_mean_axis", [m1], lambda: ops.reduce_mean_axis(m1, 1)),
        ("sum", [a], lambda: ops.sum_all(a)),
        ("mean", [a], lambda: ops.mean_all(a)),
        ("focal_loss", [p], lambda: focal_loss(p, y, alpha, gamma)),
        ("cross_entropy", [p], lambda: cross_entropy_loss(p, y)),
    ]


def _fixed_dropout(x: Tensor, mask: np.ndarray) -> Tensor:
    return apply("dropout", x, mask=mask)


def primitive_suite(instances: int = 20, seed: int = 0, h: float = 1e-6, only=None) -> list[CheckResult]:
    """Worst error per primitive over ``instances`` random small inputs."""
    gen = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    for _ in range(instances):
        for name, leaves, build in _cases(gen):
            if only is not None and name not in only:
                continue
            out_shape = build().shape
            w = gen.standard_normal(out_shape)

            def loss(build=build, w=w):
                out = build()
                return out if out.data.size == 1 and not out.shape else _weighted(out, w)

            err = max(finite_difference_check(loss, leaf, h) for leaf in leaves)
            worst[name] = max(worst.get(name, 0.0), err)
    return [CheckResult(n, e, PRIMITIVE_TOL) for n, e in worst.items()]


def model_check(cfg: TransformerConfig = DESK_CHECK_CONFIG, batch: int = 3, seed: int = 0,
                h: float = 1e-5) -> list[CheckResult]:
    """Every model parameter against central differences, dropout off."""
    params = init_params(cfg, RngStream(seed, "init"))
    gen = np.random.default_rng(seed)
    # nonzero biases and shifts so no path is trivially dead
    for t in params.values():
        if t.data.ndim == 1:
            t.data = t.data + 0.1 * gen.standard_normal(t.shape)
    X = gen.uniform(0.0, 1.0, (batch, cfg.input_dim))
    y = np.arange(batch) % 2

    def loss():
        return focal_loss(model_forward(params, cfg, X), y, 0.95, 1.5)

    return [CheckResult(f"model:{name}", finite_difference_check(loss, t, h), MODEL_TOL)
            for name, t in params.items()]


def run_gradcheck(instances: int = 20, seed: int = 0, h_prim: float = 1e-6, h_model: float = 1e-5,
                  cfg: TransformerConfig = DESK_CHECK_CONFIG):
    results = primitive_suite(instances, seed, h_prim) + model_check(cfg, seed=seed, h=h_model)
    worst = max(results, key=lambda r: r.error / r.tol)
    return results, worst

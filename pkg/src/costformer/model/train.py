"""Minibatch Adam training with validation-cost checkpoint selection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..dataio import DatasetTable, stratified_holdout
from ..grad.optim import AdamState, adam_step
from ..grad.tensor import Graph, NonFiniteError, backward
from ..metrics import CostSpec, confusion, total_cost
from ..rng import RngStream
from .config import LossConfig, TrainParams, TransformerConfig
from .losses import loss_fn
from .transformer import init_params, model_forward, predict_proba

log = logging.getLogger(__name__)


class TrainingDiverged(FloatingPointError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite training loss {loss} at epoch {epoch}")
        self.epoch = epoch


@dataclass
class TrainState:
    epoch: int
    adam: AdamState
    best_cost: float = math.inf
    best_epoch: int = -1
    best_params: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    def history_json(self) -> list:
        return list(self.history)


def snapshot(params) -> dict[str, np.ndarray]:
    return {k: v.data.copy() for k, v in params.items()}


def train(table: DatasetTable, cfg: TransformerConfig, loss_cfg: LossConfig, tp: TrainParams,
          seed: int, *, val_table: DatasetTable | None = None, callback=None):
    """Fit from a seeded initialisation; return (best params, TrainState).

    Unless ``val_table`` is given, a stratified ``tp.val_fraction`` of the
    rows is held out. After each epoch the validation total cost at
    ``tp.threshold`` is measured and the parameters are snapshotted when it
    strictly improves.
    """
    X = np.asarray(table.features, dtype=np.float64)
    y = np.asarray(table.labels)
    if np.isnan(X).any():
        raise ValueError("training table has missing cells")
    if val_table is None:
        tr_rows, va_rows = stratified_holdout(y, tp.val_fraction, RngStream(seed, "split"))
        Xv, yv = X[va_rows], y[va_rows]
        X, y = X[tr_rows], y[tr_rows]
    else:
        Xv, yv = val_table.features, val_table.labels

    params = init_params(cfg, RngStream(seed, "init"))
    names = list(params)
    adam = AdamState(lr=tp.lr)
    state = TrainState(epoch=0, adam=adam, best_params=snapshot(params))
    drop_rng = RngStream(seed, "dropout")
    shuf_rng = RngStream(seed, "shuffle")
    lf = loss_fn(loss_cfg)
    costs = CostSpec(tp.cost_fp, tp.cost_fn)
    n = X.shape[0]

    for epoch in range(1, tp.max_epochs + 1):
        order = shuf_rng.permutation(n)
        total, seen = 0.0, 0
        for s in range(0, n, tp.batch_size):
            idx = order[s:s + tp.batch_size]
            try:
                with Graph() as g:
                    for name in names:
                        g.param(params[name])
                    p = model_forward(params, cfg, X[idx], drop_rng, training=True)
                    loss = lf(p, y[idx])
            except NonFiniteError:
                raise TrainingDiverged(epoch, math.nan) from None
            lv = float(loss.data)
            if not math.isfinite(lv):
                raise TrainingDiverged(epoch, lv)
            grads = backward(g, loss)
            adam_step(params, {k: grads[params[k]] for k in names}, adam)
            total += lv * idx.size
            seen += idx.size
        train_loss = total / max(seen, 1)
        if not math.isfinite(train_loss):
            raise TrainingDiverged(epoch, train_loss)
        try:
            pv = predict_proba(params, cfg, Xv)
        except NonFiniteError:
            raise TrainingDiverged(epoch, math.nan) from None
        cm = confusion(yv, (pv >= tp.threshold).astype(np.int64))
        cost = total_cost(cm, costs)[2]
        if cost < state.best_cost:
            state.best_cost = cost
            state.best_epoch = epoch
            state.best_params = snapshot(params)
        state.epoch = epoch
        state.history.append({"epoch": epoch, "train_loss": train_loss, "val_cost": cost,
                              "best_val_cost": state.best_cost, "val_confusion": cm.to_dict()})
        log.debug("epoch %d loss %.6f val cost %.1f", epoch, train_loss, cost)
        if callback is not None:
            callback(epoch, state)

    for k in names:
        params[k].data = state.best_params[k].copy()
    return params, state

"""Dense float64 tensors with a reverse-mode tape, Adam, and init routines."""

from .gradcheck import finite_difference_check
from .init import glorot_uniform_init
from .ops import (
    activation,
    affine_map,
    dropout,
    layer_norm,
    reduce_mean_axis,
)
from .optim import AdamState, adam_step
from .tensor import Graph, NonFiniteError, ShapeError, Tensor, backward

__all__ = [
    "AdamState", "Graph", "NonFiniteError", "ShapeError", "Tensor", "activation", "adam_step",
    "affine_map", "backward", "dropout", "finite_difference_check", "glorot_uniform_init",
    "layer_norm", "reduce_mean_axis",
]

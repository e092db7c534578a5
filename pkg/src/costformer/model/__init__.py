"""Transformer-encoder classifier, losses, training, and checkpoints."""

from .checkpoint import CheckpointError, CheckpointVersionError, load_checkpoint, save_checkpoint
from .config import LossConfig, TrainParams, TransformerConfig
from .losses import cross_entropy_loss, focal_loss
from .train import TrainingDiverged, TrainState, train
from .transformer import init_params, model_forward, param_count, predict, predict_proba

__all__ = [
    "CheckpointError", "CheckpointVersionError", "LossConfig", "TrainParams", "TrainState",
    "TrainingDiverged", "TransformerConfig", "cross_entropy_loss", "focal_loss", "init_params",
    "load_checkpoint", "model_forward", "param_count", "predict", "predict_proba", "save_checkpoint",
    "train",
]

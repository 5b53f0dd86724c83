"""From-scratch convolutional detector: layers, model, Adam, training loop."""

from .model import CnnArchitecture, DetectorModel
from .optim import AdamHyper, AdamState, adam_step
from .train import TrainConfig, evaluate_model, standardize, train_model
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "CnnArchitecture",
    "DetectorModel",
    "AdamHyper",
    "AdamState",
    "adam_step",
    "TrainConfig",
    "train_model",
    "evaluate_model",
    "standardize",
    "save_checkpoint",
    "load_checkpoint",
]

"""Toy stacked-hourglass trainer for centerline key-point corpora."""

from .model import CenterlineNet, ModelSpec
from .train import TrainConfig, load_checkpoint, train

__version__ = "0.1.0"

__all__ = ["CenterlineNet", "ModelSpec", "TrainConfig", "load_checkpoint", "train", "__version__"]

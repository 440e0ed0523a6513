"""Numpy vector-field networks, optimizer, and checkpointing."""

from .adam import Adam
from .autodiff import Tensor
from .checkpoint import load_checkpoint, save_checkpoint
from .model import ModelConfig, VectorFieldModel, time_embedding

__all__ = [
    "Adam",
    "Tensor",
    "ModelConfig",
    "VectorFieldModel",
    "time_embedding",
    "load_checkpoint",
    "save_checkpoint",
]

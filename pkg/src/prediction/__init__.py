"""
The RAHN network and its trainer.
"""

from .rahn_model import (
    Encoder,
    Linear,
    QphnBlock,
    RahnModel,
    encoder_forward,
    forward,
    lfem_forward,
    loss,
    qphn_layer,
)
from .trainer import RahnTrainer, build_batch, build_model, train

__all__ = [
    "RahnModel",
    "Linear",
    "Encoder",
    "QphnBlock",
    "lfem_forward",
    "encoder_forward",
    "qphn_layer",
    "forward",
    "loss",
    "RahnTrainer",
    "build_batch",
    "build_model",
    "train",
]

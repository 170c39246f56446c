"""Continuous upsampling filters for arbitrary-scale super-resolution."""

__version__ = "0.1.0"

from . import (checkpoint, config, cuf, encoder, evaluate, imaging, kernels,
               posenc, subpixel, tensor, train)
from .model import SRModel, model_from_config

__all__ = [
    "SRModel", "model_from_config",
    "checkpoint", "config", "cuf", "encoder", "evaluate", "imaging",
    "kernels", "posenc", "subpixel", "tensor", "train",
]

"""Minimal float64 neural toolkit: layers, losses, optimizers, gradient
checking and checkpoint serialization."""

from .checkpoint import load_model, read_checkpoint, register_model, save_model, write_checkpoint
from .gradcheck import gradient_check, max_relative_error
from .layers import (
    ACTIVATIONS,
    DenseLayer,
    DropoutLayer,
    LSTMLayer,
    LstmStates,
    lstm_forward,
    sigmoid,
    softmax,
)
from .losses import LOSSES, binary_cross_entropy, categorical_cross_entropy
from .network import Network
from .optim import Adam, SGD, TrainConfig, make_optimizer

__all__ = [
    "ACTIVATIONS",
    "Adam",
    "DenseLayer",
    "DropoutLayer",
    "LOSSES",
    "LSTMLayer",
    "LstmStates",
    "Network",
    "SGD",
    "TrainConfig",
    "binary_cross_entropy",
    "categorical_cross_entropy",
    "gradient_check",
    "load_model",
    "lstm_forward",
    "make_optimizer",
    "max_relative_error",
    "read_checkpoint",
    "register_model",
    "save_model",
    "sigmoid",
    "softmax",
    "write_checkpoint",
]

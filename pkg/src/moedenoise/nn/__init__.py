"""Minimal differentiable-network stack: layers, losses, optimizers, and a
deterministic training loop with gradient verification."""

from .layers import (
    Conv1D,
    Dense,
    GlobalAvgPool,
    LayerSpec,
    Recurrent,
    ReLU,
    Softmax,
    Tanh,
    layer_from_dict,
    layer_to_dict,
)
from .losses import correlation_loss, cross_entropy_loss, mse_loss
from .model import Model, backprop, build_model, forward, forward_cached, load_model, save_model
from .optim import AdamSpec, SgdSpec
from .train import TrainConfig, TrainHistory, gradient_check, predict_batched, train

__all__ = [
    "Conv1D", "Dense", "Recurrent", "ReLU", "Tanh", "GlobalAvgPool", "Softmax",
    "LayerSpec", "layer_from_dict", "layer_to_dict",
    "correlation_loss", "mse_loss", "cross_entropy_loss",
    "Model", "build_model", "forward", "forward_cached", "backprop",
    "save_model", "load_model",
    "AdamSpec", "SgdSpec",
    "TrainConfig", "TrainHistory", "train", "gradient_check", "predict_batched",
]

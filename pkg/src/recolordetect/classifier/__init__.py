"""Hand-written CNN, optimizer and training loop."""

from .net import NetConfig, forward, init_parameters, loss_and_gradients, softmax
from .optim import AdamState, adam_step, lr_schedule
from .train import Checkpoint, Conditioner, TrainConfig, early_stopping_trace, predict, predict_proba, train

__all__ = [
    "AdamState",
    "Checkpoint",
    "Conditioner",
    "NetConfig",
    "TrainConfig",
    "adam_step",
    "early_stopping_trace",
    "forward",
    "init_parameters",
    "loss_and_gradients",
    "lr_schedule",
    "predict",
    "predict_proba",
    "softmax",
    "train",
]

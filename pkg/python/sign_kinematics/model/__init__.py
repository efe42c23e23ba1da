"""Desk-scale autoregressive text-to-pose regressor."""

from .network import ToyModel, forward_step, init_model
from .optim import Adam
from .serialize import load_model, save_model
from .train import (
    EpochLog,
    TrainConfig,
    TrainResult,
    generate,
    generate_dataset,
    load_train_config,
    predict_teacher_forced,
    train,
    write_training_log,
)

__all__ = [
    "Adam",
    "EpochLog",
    "ToyModel",
    "TrainConfig",
    "TrainResult",
    "forward_step",
    "generate",
    "generate_dataset",
    "init_model",
    "load_model",
    "load_train_config",
    "predict_teacher_forced",
    "save_model",
    "train",
    "write_training_log",
]

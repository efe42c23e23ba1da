"""Sign Kinematics: skeletal-motion toolkit for text-to-sign pose generation."""

from .errors import (
    ConfigError,
    DataError,
    SignKinematicsError,
    TrainingError,
    UsageError,
)
from .metrics import evaluate
from .posedata import Dataset, PoseSequence, load_dataset, save_dataset
from .skeleton import Skeleton, default_skeleton, load_skeleton, save_skeleton

__version__ = "0.1.0"


def version() -> str:
    return __version__


__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "PoseSequence",
    "SignKinematicsError",
    "Skeleton",
    "TrainingError",
    "UsageError",
    "default_skeleton",
    "evaluate",
    "load_dataset",
    "load_skeleton",
    "save_dataset",
    "save_skeleton",
    "version",
]

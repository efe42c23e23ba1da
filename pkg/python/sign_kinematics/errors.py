"""Exception hierarchy. ``cli.run_cli`` maps each branch to an exit code."""

from __future__ import annotations


class SignKinematicsError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 3


class UsageError(SignKinematicsError):
    """Bad command-line usage."""

    exit_code = 1


class ConfigError(UsageError):
    """Invalid configuration value, unknown key, or duplicate experiment variant."""


class DataError(SignKinematicsError, ValueError):
    """Input data violates a documented invariant."""

    exit_code = 2


class ParseError(DataError):
    """A data file could not be parsed; the message names file, line and field."""


class ShapeMismatchError(DataError):
    """Array shapes disagree (joint count, frame count, hidden size, ...)."""


class NonFiniteError(DataError):
    """A coordinate is NaN or infinite."""


class AlignmentError(DataError):
    """Prediction and reference datasets cannot be paired."""


class DegenerateBoneError(DataError):
    """A reference bone (or a whole frame) has near-zero length."""


class TopologyError(DataError):
    """A skeleton is not a single rooted tree with labelled bones."""


class TrainingError(SignKinematicsError, RuntimeError):
    """Failure while training or running a model."""

    exit_code = 3


class DivergenceError(TrainingError):
    """The training loss became non-finite."""


class ModelFormatError(TrainingError):
    """A model file has the wrong magic, version, or size."""

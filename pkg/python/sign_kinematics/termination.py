"""End-of-sequence head, counter baseline, and the stop/continue decision rules.

``p`` from the EOS head is the probability of *continuing*: generation goes on while
``p > tau`` and stops otherwise. ``eos_polarity = "end"`` reads ``p`` as a stop
probability instead (stop while ``p > tau``). Every decision is bounded by
``max_frames``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .common import check_keys
from .errors import ConfigError, ShapeMismatchError

MODES = ("eos", "counter")
POLARITIES = ("continue", "end")


@dataclass(frozen=True)
class EosHead:
    weight_vector: np.ndarray
    bias: float


@dataclass(frozen=True)
class TerminationConfig:
    mode: str = "eos"
    tau: float = 0.5
    max_frames: int = 512
    eos_polarity: str = "continue"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"termination mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"termination tau must lie in (0, 1), got {self.tau}")
        if self.max_frames < 1:
            raise ConfigError(f"termination max_frames must be >= 1, got {self.max_frames}")
        if self.eos_polarity not in POLARITIES:
            raise ConfigError(f"eos_polarity must be one of {POLARITIES}")

    @classmethod
    def from_dict(cls, data: dict) -> TerminationConfig:
        check_keys("termination", data, {"mode", "tau", "max_frames", "eos_polarity"})
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "tau": self.tau,
            "max_frames": self.max_frames,
            "eos_polarity": self.eos_polarity,
        }


def eos_probability(hidden: np.ndarray, head: EosHead) -> float:
    """sigma(W . h + B)."""
    hidden = np.asarray(hidden, dtype=float)
    if hidden.shape != np.shape(head.weight_vector):
        raise ShapeMismatchError(
            f"hidden size {hidden.shape} does not match EOS head {np.shape(head.weight_vector)}"
        )
    return float(expit(float(np.dot(head.weight_vector, hidden)) + head.bias))


def eos_decision(p: float, tau: float, polarity: str = "continue") -> bool:
    """True to continue. Strict inequality: ``p == tau`` stops."""
    fired = bool(p > tau)
    return fired if polarity == "continue" else not fired


def counter_decision(counter: float) -> bool:
    return bool(counter < 1.0)


def eos_targets(num_frames: int, polarity: str = "continue") -> np.ndarray:
    """Continue (1) on frames 1..T-1, stop (0) on frame T; flipped for ``end`` polarity."""
    targets = np.ones(num_frames)
    targets[-1] = 0.0
    return targets if polarity == "continue" else 1.0 - targets


def eos_balance_weights(num_frames: int) -> np.ndarray:
    """Per-frame EOS loss weights giving the single stop frame the mass of all T-1
    continue frames together. A one-frame sequence keeps weight 1."""
    weights = np.ones(num_frames)
    if num_frames > 1:
        weights[-1] = num_frames - 1
    return weights


def counter_targets(num_frames: int) -> np.ndarray:
    """t / T for t = 1..T."""
    return np.arange(1, num_frames + 1) / num_frames


def should_continue(
    frames_so_far: int, p_eos: float, counter: float, config: TerminationConfig
) -> bool:
    if frames_so_far >= config.max_frames:
        return False
    if config.mode == "eos":
        return eos_decision(p_eos, config.tau, config.eos_polarity)
    return counter_decision(counter)

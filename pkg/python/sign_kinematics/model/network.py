"""Mean-pool text encoder plus a one-hidden-layer autoregressive pose decoder.

The decoder input at frame ``t`` is ``[context; previous pose; t / max_frames]``.
The tanh hidden state feeds three heads: the next pose (N x 3), the EOS logit and
the progress counter. Gradients are written out by hand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ..errors import ConfigError, DataError, ShapeMismatchError
from ..termination import EosHead, eos_probability

if TYPE_CHECKING:
    from .train import TrainConfig

INIT_SCALE = 0.1
PARAM_NAMES = (
    "embed",
    "w_hidden",
    "b_hidden",
    "w_pose",
    "b_pose",
    "w_eos",
    "b_eos",
    "w_counter",
    "b_counter",
)


@dataclass
class ToyModel:
    vocabulary: tuple[str, ...]
    num_joints: int
    embed_dim: int
    hidden_dim: int
    max_frames: int
    params: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        self.vocabulary = tuple(self.vocabulary)
        expected = param_shapes(
            len(self.vocabulary), self.num_joints, self.embed_dim, self.hidden_dim
        )
        for name, shape in expected.items():
            if name not in self.params:
                raise ShapeMismatchError(f"model is missing parameter {name!r}")
            if self.params[name].shape != shape:
                raise ShapeMismatchError(
                    f"parameter {name!r} has shape {self.params[name].shape}, expected {shape}"
                )

    @property
    def input_dim(self) -> int:
        return self.embed_dim + 3 * self.num_joints + 1

    def token_ids(self, tokens) -> np.ndarray:
        index = {tok: i for i, tok in enumerate(self.vocabulary)}
        unknown = [tok for tok in tokens if tok not in index]
        if unknown:
            raise DataError(f"unknown token(s) {unknown}")
        if not tokens:
            raise DataError("token sequence must not be empty")
        return np.array([index[tok] for tok in tokens], dtype=int)

    def copy(self) -> ToyModel:
        return ToyModel(
            self.vocabulary,
            self.num_joints,
            self.embed_dim,
            self.hidden_dim,
            self.max_frames,
            {name: value.copy() for name, value in self.params.items()},
        )


@dataclass(frozen=True)
class StepOutput:
    pose: np.ndarray
    hidden: np.ndarray
    p_eos: float
    counter: float


@dataclass(frozen=True)
class ForwardCache:
    """Everything the backward pass needs from a teacher-forced forward pass."""

    token_ids: np.ndarray
    inputs: np.ndarray
    hidden: np.ndarray
    poses: np.ndarray
    eos_logits: np.ndarray
    counters: np.ndarray


def param_shapes(vocab_size: int, num_joints: int, d: int, h: int) -> dict[str, tuple]:
    out = 3 * num_joints
    return {
        "embed": (vocab_size, d),
        "w_hidden": (h, d + out + 1),
        "b_hidden": (h,),
        "w_pose": (out, h),
        "b_pose": (out,),
        "w_eos": (h,),
        "b_eos": (1,),
        "w_counter": (h,),
        "b_counter": (1,),
    }


def init_model(config: TrainConfig, vocabulary, num_joints: int) -> ToyModel:
    """Uniform [-0.1, 0.1] parameters drawn from ``config.seed``."""
    if config.embed_dim < 1 or config.hidden_dim < 1:
        raise ConfigError(
            f"model dimensions must be >= 1, got d={config.embed_dim} h={config.hidden_dim}"
        )
    if num_joints < 1:
        raise ConfigError(f"num_joints must be >= 1, got {num_joints}")
    vocabulary = tuple(vocabulary)
    if not vocabulary:
        raise ConfigError("vocabulary must not be empty")
    rng = np.random.default_rng(config.seed)
    shapes = param_shapes(len(vocabulary), num_joints, config.embed_dim, config.hidden_dim)
    params = {
        name: rng.uniform(-INIT_SCALE, INIT_SCALE, size=shapes[name]) for name in PARAM_NAMES
    }
    return ToyModel(
        vocabulary,
        num_joints,
        config.embed_dim,
        config.hidden_dim,
        config.termination.max_frames,
        params,
    )


def eos_head(model: ToyModel) -> EosHead:
    return EosHead(model.params["w_eos"], float(model.params["b_eos"][0]))


def _context(model: ToyModel, token_ids: np.ndarray) -> np.ndarray:
    return model.params["embed"][token_ids].mean(axis=0)


def _heads(model: ToyModel, hidden: np.ndarray):
    p = model.params
    pose = hidden @ p["w_pose"].T + p["b_pose"]
    logit = hidden @ p["w_eos"] + p["b_eos"][0]
    counter = hidden @ p["w_counter"] + p["b_counter"][0]
    return pose, logit, counter


def forward_step(model: ToyModel, tokens, prev_pose: np.ndarray, t: int) -> StepOutput:
    """Predict frame ``t`` (1-based) from the tokens and the previous pose."""
    if t < 1:
        raise DataError(f"frame index must be >= 1, got {t}")
    prev_pose = np.asarray(prev_pose, dtype=float)
    if prev_pose.shape != (model.num_joints, 3):
        raise ShapeMismatchError(
            f"previous pose has shape {prev_pose.shape}, expected ({model.num_joints}, 3)"
        )
    context = _context(model, model.token_ids(tokens))
    x = np.concatenate([context, prev_pose.ravel(), [t / model.max_frames]])
    hidden = np.tanh(model.params["w_hidden"] @ x + model.params["b_hidden"])
    pose, _, counter = _heads(model, hidden)
    return StepOutput(
        pose=pose.reshape(model.num_joints, 3),
        hidden=hidden,
        p_eos=eos_probability(hidden, eos_head(model)),
        counter=float(counter),
    )


def teacher_forced_inputs(prev_frames: np.ndarray) -> np.ndarray:
    """Decoder pose inputs for frames 1..T: zeros, then frames 1..T-1."""
    shifted = np.zeros_like(prev_frames)
    shifted[1:] = prev_frames[:-1]
    return shifted


def forward_sequence(model: ToyModel, tokens, prev_poses: np.ndarray) -> ForwardCache:
    """Run all T decoder steps at once, each conditioned on ``prev_poses[t]``."""
    prev_poses = np.asarray(prev_poses, dtype=float)
    num_frames = prev_poses.shape[0]
    if prev_poses.shape[1:] != (model.num_joints, 3):
        raise ShapeMismatchError(
            f"poses have shape {prev_poses.shape}, expected (T, {model.num_joints}, 3)"
        )
    token_ids = model.token_ids(tokens)
    context = _context(model, token_ids)
    time = np.arange(1, num_frames + 1, dtype=float) / model.max_frames
    inputs = np.concatenate(
        [
            np.broadcast_to(context, (num_frames, model.embed_dim)),
            prev_poses.reshape(num_frames, -1),
            time[:, None],
        ],
        axis=1,
    )
    hidden = np.tanh(inputs @ model.params["w_hidden"].T + model.params["b_hidden"])
    poses, logits, counters = _heads(model, hidden)
    return ForwardCache(
        token_ids=token_ids,
        inputs=inputs,
        hidden=hidden,
        poses=poses.reshape(num_frames, model.num_joints, 3),
        eos_logits=logits,
        counters=counters,
    )


def backward_sequence(
    model: ToyModel,
    cache: ForwardCache,
    d_poses: np.ndarray,
    d_logits: np.ndarray,
    d_counters: np.ndarray,
) -> dict[str, np.ndarray]:
    """Parameter gradients given upstream gradients for every head output."""
    p = model.params
    num_frames = cache.hidden.shape[0]
    d_out = np.asarray(d_poses, dtype=float).reshape(num_frames, -1)
    grads = {
        "w_pose": d_out.T @ cache.hidden,
        "b_pose": d_out.sum(axis=0),
        "w_eos": d_logits @ cache.hidden,
        "b_eos": np.array([d_logits.sum()]),
        "w_counter": d_counters @ cache.hidden,
        "b_counter": np.array([d_counters.sum()]),
    }
    d_hidden = d_out @ p["w_pose"] + np.outer(d_logits, p["w_eos"])
    d_hidden += np.outer(d_counters, p["w_counter"])
    d_pre = d_hidden * (1.0 - cache.hidden**2)
    grads["w_hidden"] = d_pre.T @ cache.inputs
    grads["b_hidden"] = d_pre.sum(axis=0)

    d_context = (d_pre @ p["w_hidden"])[:, : model.embed_dim].sum(axis=0)
    d_embed = np.zeros_like(p["embed"])
    np.add.at(d_embed, cache.token_ids, d_context / len(cache.token_ids))
    grads["embed"] = d_embed
    return grads

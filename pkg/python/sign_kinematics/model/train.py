"""Teacher-forced training, free-running generation, and the training-log CSV."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..common import check_keys, load_json_config, log
from ..errors import ConfigError, DataError, DivergenceError
from ..losses import (
    LossCoefficients,
    composite_loss,
    counter_regression_loss,
    eos_loss_from_logits,
)
from ..posedata import Dataset, PoseSequence, add_gaussian_noise
from ..skeleton import Skeleton
from ..termination import (
    TerminationConfig,
    counter_targets,
    eos_balance_weights,
    eos_targets,
    should_continue,
)
from ..weighting import (
    BoneLambdas,
    JointWeights,
    load_lambdas,
    load_weights,
    uniform_lambdas,
    uniform_weights,
)
from .network import (
    ToyModel,
    backward_sequence,
    forward_sequence,
    forward_step,
    teacher_forced_inputs,
)
from .optim import Adam

LOG_COLUMNS = ["epoch", "total", "mse", "bone", "pose", "eos"]
_TRAIN_STREAM = 1


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    learning_rate: float = 1e-3
    epochs: int = 40
    batch_size: int = 8
    embed_dim: int = 16
    hidden_dim: int = 64
    noise_stddev: float = 0.005
    balance_eos: bool = True
    coefficients: LossCoefficients = field(default_factory=LossCoefficients)
    termination: TerminationConfig = field(default_factory=TerminationConfig)
    weights_path: str | None = None
    lambdas_path: str | None = None

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"train: epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"train: batch_size must be >= 1, got {self.batch_size}")
        if self.embed_dim < 1 or self.hidden_dim < 1:
            raise ConfigError(
                f"train: embed_dim and hidden_dim must be >= 1, "
                f"got {self.embed_dim} and {self.hidden_dim}"
            )
        if self.learning_rate < 0:
            raise ConfigError(f"train: learning_rate must be >= 0, got {self.learning_rate}")
        if self.noise_stddev < 0:
            raise ConfigError(f"train: noise_stddev must be >= 0, got {self.noise_stddev}")

    @classmethod
    def from_dict(cls, data: dict) -> TrainConfig:
        check_keys("train", data, set(cls.__dataclass_fields__))
        data = dict(data)
        if "coefficients" in data:
            data["coefficients"] = LossCoefficients.from_dict(data["coefficients"])
        if "termination" in data:
            data["termination"] = TerminationConfig.from_dict(data["termination"])
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "noise_stddev": self.noise_stddev,
            "balance_eos": self.balance_eos,
            "coefficients": self.coefficients.to_dict(),
            "termination": self.termination.to_dict(),
            "weights_path": self.weights_path,
            "lambdas_path": self.lambdas_path,
        }


def load_train_config(path: Path | str) -> TrainConfig:
    return TrainConfig.from_dict(load_json_config(path))


@dataclass(frozen=True)
class SequenceLoss:
    value: float
    components: dict[str, float]
    grads: dict[str, np.ndarray]


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    total: float
    mse: float
    bone: float
    pose: float
    eos: float


@dataclass
class TrainResult:
    model: ToyModel
    log: list[EpochLog]


def sequence_loss(
    model: ToyModel,
    seq: PoseSequence,
    skeleton: Skeleton,
    weights: JointWeights,
    lambdas: BoneLambdas,
    config: TrainConfig,
    rng: np.random.Generator | None = None,
) -> SequenceLoss:
    """Composite pose loss plus the weighted termination term for one sequence.

    Inputs are teacher forced: frame t is conditioned on ground-truth frame t-1,
    perturbed with ``config.noise_stddev`` noise when ``rng`` is given. With
    ``config.balance_eos`` the stop frame carries as much EOS loss as all continue frames.
    """
    frames = seq.frames
    if rng is not None:
        frames = add_gaussian_noise(frames, config.noise_stddev, rng)
    cache = forward_sequence(model, seq.tokens, teacher_forced_inputs(frames))
    pose_loss = composite_loss(
        cache.poses, seq.frames, skeleton, weights, lambdas, config.coefficients
    )
    num_frames = seq.num_frames
    eos_weight = config.coefficients.eos_weight
    d_logits = np.zeros(num_frames)
    d_counters = np.zeros(num_frames)
    if config.termination.mode == "eos":
        targets = eos_targets(num_frames, config.termination.eos_polarity)
        balance = eos_balance_weights(num_frames) if config.balance_eos else None
        stop = eos_loss_from_logits(cache.eos_logits, targets, balance)
        d_logits = eos_weight * stop.grad
    else:
        stop = counter_regression_loss(cache.counters, counter_targets(num_frames))
        d_counters = eos_weight * stop.grad
    grads = backward_sequence(model, cache, pose_loss.grad, d_logits, d_counters)
    components = {**pose_loss.components, "eos": stop.value}
    return SequenceLoss(pose_loss.value + eos_weight * stop.value, components, grads)


def _resolve_weights(
    config: TrainConfig, skeleton: Skeleton, weights: JointWeights | None
) -> JointWeights:
    if weights is not None:
        return weights
    if config.weights_path:
        return load_weights(config.weights_path)
    return uniform_weights(skeleton.num_joints)


def _resolve_lambdas(
    config: TrainConfig, skeleton: Skeleton, lambdas: BoneLambdas | None
) -> BoneLambdas:
    if lambdas is not None:
        return lambdas
    if config.lambdas_path:
        return load_lambdas(config.lambdas_path)
    return uniform_lambdas(skeleton.num_bones)


def train(
    model: ToyModel,
    dataset: Dataset,
    config: TrainConfig,
    weights: JointWeights | None = None,
    lambdas: BoneLambdas | None = None,
) -> TrainResult:
    """Train a copy of ``model``; the input model is left untouched.

    Weights and lambdas default to the files named in ``config``, then to all ones.
    """
    if len(dataset) == 0:
        raise DataError("cannot train on an empty dataset")
    skeleton = dataset.skeleton
    weights = _resolve_weights(config, skeleton, weights)
    lambdas = _resolve_lambdas(config, skeleton, lambdas)
    model = model.copy()
    optimizer = Adam(learning_rate=config.learning_rate)
    rng = np.random.default_rng([config.seed, _TRAIN_STREAM])
    noise_rng = rng if config.noise_stddev > 0 else None

    history = []
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        sums = dict.fromkeys(LOG_COLUMNS[1:], 0.0)
        order = rng.permutation(len(dataset))
        for lo in range(0, len(order), config.batch_size):
            batch = order[lo : lo + config.batch_size]
            grads = {name: np.zeros_like(value) for name, value in model.params.items()}
            for i in batch:
                seq = dataset.sequences[i]
                result = sequence_loss(model, seq, skeleton, weights, lambdas, config, noise_rng)
                if not np.isfinite(result.value):
                    raise DivergenceError(
                        f"non-finite loss on sequence {seq.id} at epoch {epoch}"
                    )
                sums["total"] += result.value
                for key in ("mse", "bone", "pose", "eos"):
                    sums[key] += result.components.get(key, 0.0)
                for name, g in result.grads.items():
                    grads[name] += g
            for g in grads.values():
                g /= len(batch)
            optimizer.step(model.params, grads)
        means = {key: value / len(dataset) for key, value in sums.items()}
        entry = EpochLog(epoch=epoch, **means)
        history.append(entry)
        log(
            f"epoch={epoch} total={entry.total:.6f} mse={entry.mse:.6f} "
            f"bone={entry.bone:.6f} pose={entry.pose:.6f} eos={entry.eos:.6f} "
            f"elapsed={time.perf_counter() - start:.2f}s"
        )
    return TrainResult(model, history)


def write_training_log(history: list[EpochLog], path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(LOG_COLUMNS)
        for entry in history:
            writer.writerow(
                [entry.epoch]
                + [repr(float(getattr(entry, col))) for col in LOG_COLUMNS[1:]]
            )


def generate(
    model: ToyModel, tokens, termination: TerminationConfig, seq_id: str = ""
) -> PoseSequence:
    """Free-running decoding from a zero initial pose."""
    tokens = tuple(tokens)
    model.token_ids(tokens)
    prev = np.zeros((model.num_joints, 3))
    frames = []
    t = 1
    while True:
        step = forward_step(model, tokens, prev, t)
        if not np.all(np.isfinite(step.pose)):
            raise DivergenceError(f"non-finite pose generated for {seq_id or tokens} at frame {t}")
        frames.append(step.pose)
        if not should_continue(len(frames), step.p_eos, step.counter, termination):
            break
        prev = step.pose
        t += 1
    return PoseSequence(np.stack(frames), tokens, seq_id)


def generate_dataset(model: ToyModel, dataset: Dataset, termination: TerminationConfig) -> Dataset:
    sequences = [generate(model, seq.tokens, termination, seq.id) for seq in dataset]
    return Dataset(dataset.skeleton, sequences, dataset.split)


def predict_teacher_forced(model: ToyModel, dataset: Dataset) -> Dataset:
    """Frame-aligned predictions, each frame conditioned on the true previous frame."""
    sequences = []
    for seq in dataset:
        cache = forward_sequence(model, seq.tokens, teacher_forced_inputs(seq.frames))
        sequences.append(PoseSequence(cache.poses, seq.tokens, seq.id))
    return Dataset(dataset.skeleton, sequences, dataset.split)

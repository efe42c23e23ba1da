"""Parent-relative joint weights and bone-length reweighting factors.

Variance of a 3-vector is the trace of its covariance: the sum of the three
per-component population variances. All frames of all sequences are pooled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, DegenerateBoneError, ParseError
from .posedata import Dataset, pair_sequences
from .skeleton import MIN_REFERENCE_BONE, bone_lengths, relative_positions



@dataclass(frozen=True)
class JointVariances:
    sigma_sq: np.ndarray


@dataclass(frozen=True)
class JointWeights:
    w: np.ndarray


@dataclass(frozen=True)
class BoneLambdas:
    lam: np.ndarray


def joint_variances(dataset: Dataset) -> JointVariances:
    """Root: variance of its absolute position. Other joints: variance of their link."""
    frames = dataset.pooled_frames()
    if frames.shape[0] == 0:
        raise DataError("cannot compute joint variances of an empty dataset")
    local = relative_positions(frames, dataset.skeleton)
    # Centred on the first sample: identical samples give exactly 0.
    centred = local - local[:1]
    return JointVariances(centred.var(axis=0).sum(axis=-1))


def parent_relative_weights(variances: JointVariances) -> JointWeights:
    """w_i = 1 - sigma_i^2 / sum_j sigma_j^2; all ones when the data never moves."""
    sigma_sq = np.asarray(variances.sigma_sq, dtype=float)
    total = sigma_sq.sum()
    if total == 0.0:
        return JointWeights(np.ones_like(sigma_sq))
    return JointWeights(1.0 - sigma_sq / total)


def uniform_weights(num_joints: int) -> JointWeights:
    return JointWeights(np.ones(num_joints))


def uniform_lambdas(num_bones: int) -> BoneLambdas:
    return BoneLambdas(np.ones(num_bones))


def bone_length_lambda(pred: Dataset, ref: Dataset) -> BoneLambdas:
    """Mean relative absolute bone-length error per bone over every aligned dev frame."""
    pairs = pair_sequences(pred, ref, same_length=True)
    skeleton = ref.skeleton
    if not pairs:
        raise DataError("cannot compute bone-length lambdas from an empty dataset")
    pred_len = np.concatenate([bone_lengths(p.frames, skeleton) for p, _ in pairs])
    ref_len = np.concatenate([bone_lengths(r.frames, skeleton) for _, r in pairs])
    if np.any(ref_len < MIN_REFERENCE_BONE):
        t, k = np.argwhere(ref_len < MIN_REFERENCE_BONE)[0]
        joint = skeleton.joint_names[skeleton.bones[k]]
        raise DegenerateBoneError(f"reference bone ending at {joint!r} is degenerate (sample {t})")
    return BoneLambdas((np.abs(ref_len - pred_len) / ref_len).mean(axis=0))


def save_weights(weights: JointWeights, path: Path | str) -> None:
    _dump(path, {"w": [float(x) for x in weights.w]})


def load_weights(path: Path | str) -> JointWeights:
    return JointWeights(np.array(_load(path, "w"), dtype=float))


def save_lambdas(lambdas: BoneLambdas, path: Path | str) -> None:
    _dump(path, {"lambda": [float(x) for x in lambdas.lam]})


def load_lambdas(path: Path | str) -> BoneLambdas:
    return BoneLambdas(np.array(_load(path, "lambda"), dtype=float))


def _dump(path: Path | str, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


def _load(path: Path | str, key: str) -> list:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or not isinstance(data.get(key), list):
        raise ParseError(f"{path}: expected an object with a {key!r} list")
    values = data[key]
    if any(not isinstance(v, (int, float)) or v < 0 for v in values):
        raise ParseError(f"{path}: {key!r} entries must be non-negative numbers")
    return values

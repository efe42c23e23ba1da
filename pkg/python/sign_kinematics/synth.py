"""Synthetic sign-like motion: token primitives realised as smooth joint-angle trajectories.

Each primitive is a cosine-eased move from the current joint angles to a target
pose, with an optional oscillation that vanishes at both ends. Angles become
link vectors through forward kinematics over fixed bone lengths, so every
generated frame has exactly the configured bone lengths.
"""

from __future__ import annotations

import zlib
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from .common import check_keys, load_json_config
from .errors import ConfigError
from .posedata import SPLITS, Dataset, PoseSequence
from .skeleton import LinkSet, Skeleton, default_skeleton, reconstruct_pose

DEFAULT_VOCABULARY = (
    "raise_left",
    "raise_right",
    "wave_left",
    "wave_right",
    "pinch_left",
    "pinch_right",
    "point_left",
    "point_right",
    "circle_left",
    "circle_right",
    "clap",
    "nod",
)

# Keyed by child joint name; the side prefix is stripped for arm bones.
DEFAULT_BONE_LENGTHS = {
    "upper_neck": 0.10,
    "head": 0.12,
    "nose": 0.08,
    "shoulder": 0.18,
    "elbow": 0.28,
    "wrist": 0.25,
    "palm": 0.08,
    "finger_1": 0.045,
    "finger_2": 0.035,
}

_REST_DIRECTIONS = {
    "upper_neck": (0.0, 1.0, 0.0),
    "head": (0.0, 1.0, 0.0),
    "nose": (0.0, 0.0, 1.0),
    "shoulder": (1.0, 0.0, 0.0),
    "elbow": (0.0, -1.0, 0.0),
    "wrist": (0.0, -1.0, 0.0),
    "palm": (0.0, -1.0, 0.0),
    "finger_1": (0.0, -1.0, 0.0),
    "finger_2": (0.0, -1.0, 0.0),
}

# Target rotation amplitude (radians) per bone group.
_GROUP_AMPLITUDE = {
    "neck": 0.2,
    "shoulder": 0.15,
    "upper_arm": 1.2,
    "lower_arm": 1.0,
    "palm": 0.6,
    "finger": 0.9,
}

DURATION_RANGE = (20, 60)
MAX_TOKENS = 3
ROOT_SWAY = 0.01

_SPLIT_STREAM = {name: i for i, name in enumerate(SPLITS)}


@dataclass(frozen=True)
class SynthConfig:
    vocabulary: tuple[str, ...] = DEFAULT_VOCABULARY
    num_sequences: int = 200
    frame_jitter: int = 3
    bone_lengths: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_BONE_LENGTHS))

    def __post_init__(self) -> None:
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))
        object.__setattr__(self, "bone_lengths", {**DEFAULT_BONE_LENGTHS, **self.bone_lengths})
        if not self.vocabulary:
            raise ConfigError("synth: vocabulary must not be empty")
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise ConfigError("synth: vocabulary contains duplicates")
        if self.num_sequences < 1:
            raise ConfigError("synth: num_sequences must be >= 1")
        if self.frame_jitter < 0:
            raise ConfigError("synth: frame_jitter must be >= 0")
        unknown = sorted(set(self.bone_lengths) - set(DEFAULT_BONE_LENGTHS))
        if unknown:
            raise ConfigError(f"synth: unknown bone_lengths key(s) {', '.join(unknown)}")
        if any(v <= 0 for v in self.bone_lengths.values()):
            raise ConfigError("synth: bone lengths must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> SynthConfig:
        check_keys("synth", data, {"vocabulary", "num_sequences", "frame_jitter", "bone_lengths"})
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "vocabulary": list(self.vocabulary),
            "num_sequences": self.num_sequences,
            "frame_jitter": self.frame_jitter,
            "bone_lengths": dict(sorted(self.bone_lengths.items())),
        }


def load_synth_config(path: Path | str) -> SynthConfig:
    return SynthConfig.from_dict(load_json_config(path))


def _part(joint_name: str) -> str:
    return joint_name[2:] if joint_name[:2] in ("l_", "r_") else joint_name


def _rest_links(skeleton: Skeleton, lengths: Mapping[str, float]) -> np.ndarray:
    rest = np.empty((skeleton.num_bones, 3))
    for k, joint in enumerate(skeleton.bones):
        name = skeleton.joint_names[joint]
        direction = np.array(_REST_DIRECTIONS[_part(name)])
        if name.startswith("r_"):
            direction[0] = -direction[0]
        rest[k] = direction * lengths[_part(name)]
    return rest


@dataclass(frozen=True)
class Primitive:
    """Target joint angles (rotation vectors per bone) plus an end-pinned oscillation."""

    name: str
    duration: int
    target: np.ndarray
    wobble: np.ndarray
    frequency: float


def primitive_for(name: str, skeleton: Skeleton) -> Primitive:
    """Deterministic primitive parameters derived from the token name alone."""
    rng = np.random.default_rng(zlib.crc32(name.encode("utf-8")))
    if name.endswith("_left"):
        sides = ("l_",)
    elif name.endswith("_right"):
        sides = ("r_",)
    else:
        sides = ("l_", "r_")

    duration = int(rng.integers(DURATION_RANGE[0], DURATION_RANGE[1] + 1))
    target = np.zeros((skeleton.num_bones, 3))
    wobble = np.zeros((skeleton.num_bones, 3))
    for k, joint in enumerate(skeleton.bones):
        joint_name = skeleton.joint_names[joint]
        group = skeleton.joint_group[int(joint)]
        side_bone = joint_name[:2] in ("l_", "r_")
        if side_bone and joint_name[:2] not in sides:
            continue
        amplitude = _GROUP_AMPLITUDE[group]
        target[k] = rng.uniform(-amplitude, amplitude, size=3)
        if group in ("lower_arm", "palm", "finger"):
            wobble[k] = rng.uniform(-0.3, 0.3, size=3)
    frequency = float(rng.uniform(0.5, 3.0))
    return Primitive(name, duration, target, wobble, frequency)


def joint_angle_trajectory(
    primitives: list[Primitive], lengths: list[int], num_bones: int
) -> np.ndarray:
    """Concatenate primitives into per-frame rotation vectors: (sum lengths, B, 3)."""
    current = np.zeros((num_bones, 3))
    segments = []
    for prim, n in zip(primitives, lengths, strict=True):
        u = np.arange(1, n + 1) / n
        ease = 0.5 * (1.0 - np.cos(np.pi * u))
        envelope = np.sin(np.pi * u) * np.sin(2.0 * np.pi * prim.frequency * u)
        segment = (
            current[None] + ease[:, None, None] * (prim.target - current)[None]
        ) + envelope[:, None, None] * prim.wobble[None]
        segments.append(segment)
        current = prim.target
    return np.concatenate(segments, axis=0)


def angles_to_frames(
    angles: np.ndarray, root_positions: np.ndarray, skeleton: Skeleton, rest: np.ndarray
) -> np.ndarray:
    """Forward kinematics: local rotations compose down the tree and rotate rest links."""
    num_frames = angles.shape[0]
    bone_of = {int(j): k for k, j in enumerate(skeleton.bones)}
    global_rot: dict[int, Rotation] = {}
    links = np.empty((num_frames, skeleton.num_bones, 3))
    for joint in skeleton.traversal_order[1:]:
        k = bone_of[joint]
        local = Rotation.from_rotvec(angles[:, k, :])
        parent = skeleton.parents[joint]
        rot = global_rot[parent] * local if parent in global_rot else local
        global_rot[joint] = rot
        links[:, k, :] = rot.apply(rest[k])
    return np.stack(
        [
            reconstruct_pose(LinkSet(root_positions[t], links[t]), skeleton)
            for t in range(num_frames)
        ]
    )


def synthesize_dataset(config: SynthConfig, seed: int, split: str = "train") -> Dataset:
    """Generate ``config.num_sequences`` sequences; deterministic in (config, seed, split)."""
    skeleton = default_skeleton()
    rest = _rest_links(skeleton, config.bone_lengths)
    primitives = {name: primitive_for(name, skeleton) for name in config.vocabulary}
    rng = np.random.default_rng([seed, _SPLIT_STREAM[split]])

    sequences = []
    for i in range(config.num_sequences):
        count = int(rng.integers(1, MAX_TOKENS + 1))
        tokens = [config.vocabulary[j] for j in rng.integers(0, len(config.vocabulary), count)]
        jitter = rng.integers(-config.frame_jitter, config.frame_jitter + 1, size=count)
        lengths = [
            max(2, primitives[tok].duration + int(j))
            for tok, j in zip(tokens, jitter, strict=True)
        ]
        angles = joint_angle_trajectory(
            [primitives[tok] for tok in tokens], lengths, skeleton.num_bones
        )
        num_frames = angles.shape[0]
        phase = rng.uniform(0.0, 2.0 * np.pi)
        t = np.arange(num_frames) / num_frames
        root = np.zeros((num_frames, 3))
        root[:, 0] = ROOT_SWAY * np.sin(2.0 * np.pi * t + phase)
        frames = angles_to_frames(angles, root, skeleton, rest)
        sequences.append(PoseSequence(frames, tuple(tokens), f"{split}_{i:05d}"))
    return Dataset(skeleton, sequences, split)

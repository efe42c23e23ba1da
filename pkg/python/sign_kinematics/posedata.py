"""Pose-sequence data model, JSONL ingestion/emission, scale normalization, noise augmentation.

Dataset files are JSON Lines, one sequence per line::

    {"id": "train_00000", "tokens": ["wave_left"], "frames": [[[x, y, z], ...], ...]}

with the skeleton stored separately (``skeleton.json`` beside the dataset by default).
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    AlignmentError,
    DataError,
    DegenerateBoneError,
    NonFiniteError,
    ParseError,
    ShapeMismatchError,
)
from .skeleton import Skeleton, bone_lengths, load_skeleton, save_skeleton

SPLITS = ("train", "dev", "test")
SKELETON_FILENAME = "skeleton.json"
MIN_MEAN_BONE_LENGTH = 1e-8


@dataclass(frozen=True)
class PoseSequence:
    frames: np.ndarray
    tokens: tuple[str, ...]
    id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "frames", np.asarray(self.frames, dtype=float))
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])


@dataclass
class Dataset:
    skeleton: Skeleton
    sequences: list[PoseSequence] = field(default_factory=list)
    split: str = "train"

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise DataError(f"split must be one of {SPLITS}, got {self.split!r}")

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    @property
    def ids(self) -> list[str]:
        return [seq.id for seq in self.sequences]

    def pooled_frames(self) -> np.ndarray:
        """All frames of all sequences stacked in sequence order: (sum T, N, 3)."""
        if not self.sequences:
            return np.zeros((0, self.skeleton.num_joints, 3))
        return np.concatenate([seq.frames for seq in self.sequences], axis=0)


def validate_sequence(seq: PoseSequence, skeleton: Skeleton) -> None:
    frames = seq.frames
    if frames.ndim != 3 or frames.shape[0] < 1:
        raise ShapeMismatchError(f"sequence {seq.id}: expected T x N x 3 frames with T >= 1")
    for t, frame in enumerate(frames):
        if frame.shape != (skeleton.num_joints, 3):
            raise ShapeMismatchError(
                f"joint-count mismatch at seq {seq.id}/frame {t}: "
                f"{frame.shape[0]} joints, skeleton has {skeleton.num_joints}"
            )
    bad = np.argwhere(~np.isfinite(frames))
    if bad.size:
        t = int(bad[0][0])
        raise NonFiniteError(f"non-finite coordinate in sequence {seq.id} at frame {t}")


def _parse_frames(raw: object, seq_id: str, skeleton: Skeleton, where: str) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise ParseError(f"{where}: field 'frames' must be a non-empty list")
    n = skeleton.num_joints
    frames = np.empty((len(raw), n, 3))
    for t, frame in enumerate(raw):
        if not isinstance(frame, list) or len(frame) != n:
            count = len(frame) if isinstance(frame, list) else "?"
            raise ShapeMismatchError(
                f"joint-count mismatch at seq {seq_id}/frame {t}: {count} joints, skeleton has {n}"
            )
        try:
            frames[t] = np.array(frame, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{where}: frame {t} is not a list of [x, y, z] triples") from exc
    return frames


def load_dataset(
    path: Path | str, skeleton: Skeleton | None = None, split: str | None = None
) -> Dataset:
    """Read a JSONL dataset and validate every invariant.

    ``skeleton`` defaults to ``skeleton.json`` beside the file; ``split`` defaults
    to the file stem when it names a split, else ``train``.
    """
    path = Path(path)
    if skeleton is None:
        skeleton = load_skeleton(path.parent / SKELETON_FILENAME)
    if split is None:
        split = path.stem if path.stem in SPLITS else "train"

    sequences = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: {exc.msg} (column {exc.colno})") from exc
            if not isinstance(obj, dict):
                raise ParseError(f"{where}: expected a JSON object")
            for key in ("id", "tokens", "frames"):
                if key not in obj:
                    raise ParseError(f"{where}: missing field {key!r}")
            seq_id = str(obj["id"])
            frames = _parse_frames(obj["frames"], seq_id, skeleton, where)
            seq = PoseSequence(frames, tuple(str(t) for t in obj["tokens"]), seq_id)
            validate_sequence(seq, skeleton)
            sequences.append(seq)
    return Dataset(skeleton, sequences, split)


def _format_joint(joint: np.ndarray) -> str:
    return "[" + ",".join(repr(float(x)) for x in joint) + "]"


def _format_frames(frames: np.ndarray) -> str:
    return "[" + ",".join("[" + ",".join(map(_format_joint, f)) + "]" for f in frames) + "]"


def save_dataset(dataset: Dataset, path: Path | str, write_skeleton: bool = True) -> None:
    """Write ``dataset`` as JSONL; coordinates use the shortest exact float repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for seq in dataset.sequences:
            head = json.dumps({"id": seq.id, "tokens": list(seq.tokens)})
            f.write(f'{head[:-1]}, "frames": {_format_frames(seq.frames)}}}\n')
    if write_skeleton:
        save_skeleton(dataset.skeleton, path.parent / SKELETON_FILENAME)


def reference_bone_lengths(dataset: Dataset) -> np.ndarray:
    """Mean length of every bone over all frames of ``dataset``."""
    frames = dataset.pooled_frames()
    if frames.shape[0] == 0:
        raise DataError("cannot compute reference bone lengths of an empty dataset")
    return bone_lengths(frames, dataset.skeleton).mean(axis=0)


def normalize_skeleton_scale(
    sequence: PoseSequence, skeleton: Skeleton, reference_lengths: Sequence[float]
) -> PoseSequence:
    """Scale each frame about the root so its mean bone/reference length ratio is 1."""
    reference = np.asarray(reference_lengths, dtype=float)
    if reference.shape != (skeleton.num_bones,):
        raise ShapeMismatchError(
            f"expected {skeleton.num_bones} reference lengths, got {reference.shape}"
        )
    if np.any(reference <= 0):
        raise DataError("reference bone lengths must be positive")

    frames = sequence.frames
    lengths = bone_lengths(frames, skeleton)
    collapsed = np.flatnonzero(lengths.mean(axis=1) < MIN_MEAN_BONE_LENGTH)
    if collapsed.size:
        raise DegenerateBoneError(
            f"sequence {sequence.id}: frame {int(collapsed[0])} has collapsed bones"
        )
    scale = 1.0 / (lengths / reference).mean(axis=1)
    root = frames[:, skeleton.root : skeleton.root + 1, :]
    scaled = root + scale[:, None, None] * (frames - root)
    return replace(sequence, frames=scaled)


def normalize_dataset(dataset: Dataset, reference_lengths: Sequence[float]) -> Dataset:
    sequences = [
        normalize_skeleton_scale(seq, dataset.skeleton, reference_lengths) for seq in dataset
    ]
    return Dataset(dataset.skeleton, sequences, dataset.split)


def add_gaussian_noise(pose: np.ndarray, stddev: float, rng: np.random.Generator) -> np.ndarray:
    """Perturb every coordinate with independent N(0, stddev^2) noise."""
    if stddev < 0:
        raise DataError(f"noise stddev must be >= 0, got {stddev}")
    pose = np.asarray(pose, dtype=float)
    if stddev == 0:
        return pose.copy()
    return pose + rng.normal(0.0, stddev, size=pose.shape)


def pair_sequences(
    pred: Dataset | Iterable[PoseSequence], ref: Dataset, same_length: bool = False
) -> list[tuple[PoseSequence, PoseSequence]]:
    """Match predictions to references by id, in reference order."""
    by_id = {seq.id: seq for seq in pred}
    ref_ids = {seq.id for seq in ref}
    if set(by_id) != ref_ids:
        missing = sorted(ref_ids - set(by_id))[:3]
        extra = sorted(set(by_id) - ref_ids)[:3]
        raise AlignmentError(f"id sets differ (missing {missing}, unexpected {extra})")
    pairs = []
    for seq in ref:
        other = by_id[seq.id]
        if same_length and other.num_frames != seq.num_frames:
            raise AlignmentError(
                f"sequence {seq.id}: {other.num_frames} predicted frames vs "
                f"{seq.num_frames} reference frames"
            )
        pairs.append((other, seq))
    return pairs


def token_vocabulary(*datasets: Dataset) -> list[str]:
    """Sorted set of every token used by ``datasets``."""
    return sorted({tok for dataset in datasets for seq in dataset for tok in seq.tokens})

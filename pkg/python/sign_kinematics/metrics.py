"""Kinematic evaluation: bone-length, movement variance/velocity, and frame-length analyses.

Deviations are percentages relative to the reference. Movement deviations are
computed per sequence first, then averaged per joint across sequences, then per
bone group. Frame-wise comparisons of free-running generations use the common
frame prefix of each (prediction, reference) pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DegenerateBoneError
from .posedata import Dataset, PoseSequence, pair_sequences
from .skeleton import (
    GROUP_NAMES,
    MIN_REFERENCE_BONE,
    Skeleton,
    bone_lengths,
    relative_positions,
)

MIN_REFERENCE_STAT = 1e-12
HISTOGRAM_BINS = 20
KINDS = ("variance", "velocity")
MOVEMENT_MODES = ("global", "local")


@dataclass(frozen=True)
class GroupReport:
    groups: dict[str, float]
    overall: float
    members: dict[str, int] = field(default_factory=dict)
    per_joint: dict[str, float] = field(default_factory=dict)
    excluded: dict[str, int] = field(default_factory=dict)
    group_excluded: dict[str, int] = field(default_factory=dict)

    @property
    def excluded_total(self) -> int:
        return sum(self.excluded.values())


@dataclass(frozen=True)
class FrameLengthStats:
    mean_signed_rel_diff: float
    mean_abs_rel_diff: float
    mean_pred_length: float
    mean_ref_length: float
    bin_edges: np.ndarray
    pred_counts: np.ndarray
    ref_counts: np.ndarray


@dataclass(frozen=True)
class EvaluationReport:
    bone_length: GroupReport
    variance_global: GroupReport
    variance_local: GroupReport
    velocity_global: GroupReport
    velocity_local: GroupReport
    frame_length: FrameLengthStats


def _group_report(
    values: dict[int, float], excluded: dict[int, int], skeleton: Skeleton
) -> GroupReport:
    """Average per-joint values over the members of each bone group."""
    groups: dict[str, float] = {}
    members: dict[str, int] = {}
    group_excluded: dict[str, int] = {}
    total, count = 0.0, 0
    for group in GROUP_NAMES:
        vals = [values[j] for j in skeleton.groups.get(group, ()) if j in values]
        if not vals:
            continue
        groups[group] = float(np.mean(vals))
        members[group] = len(vals)
        group_excluded[group] = sum(excluded.get(j, 0) for j in skeleton.groups[group])
        total += sum(vals)
        count += len(vals)
    names = skeleton.joint_names
    return GroupReport(
        groups=groups,
        overall=total / count if count else 0.0,
        members=members,
        per_joint={names[j]: v for j, v in sorted(values.items())},
        excluded={names[j]: n for j, n in sorted(excluded.items()) if n},
        group_excluded=group_excluded,
    )


def _truncate(pred: PoseSequence, ref: PoseSequence) -> tuple[np.ndarray, np.ndarray]:
    n = min(pred.num_frames, ref.num_frames)
    return pred.frames[:n], ref.frames[:n]


def bone_length_deviation(pred: Dataset, ref: Dataset) -> GroupReport:
    """Per bone: |l_pred - l_ref| / l_ref x 100, averaged over each sequence's aligned
    frames first and then across sequences."""
    skeleton = ref.skeleton
    pairs = pair_sequences(pred, ref)
    if not pairs:
        return _group_report({}, {}, skeleton)
    rel = []
    for p, r in pairs:
        p_frames, r_frames = _truncate(p, r)
        ref_len = bone_lengths(r_frames, skeleton)
        if np.any(ref_len < MIN_REFERENCE_BONE):
            raise DegenerateBoneError(f"sequence {r.id}: degenerate reference bone")
        rel.append((np.abs(bone_lengths(p_frames, skeleton) - ref_len) / ref_len).mean(axis=0))
    per_bone = np.mean(rel, axis=0) * 100.0
    values = {int(j): float(v) for j, v in zip(skeleton.bones, per_bone, strict=True)}
    return _group_report(values, {}, skeleton)


def _positions(frames: np.ndarray, skeleton: Skeleton, mode: str) -> np.ndarray:
    if mode not in MOVEMENT_MODES:
        raise DataError(f"mode must be one of {MOVEMENT_MODES}, got {mode!r}")
    return frames if mode == "global" else relative_positions(frames, skeleton)


def movement_variance(seq: PoseSequence, skeleton: Skeleton, mode: str) -> np.ndarray:
    """Per joint: trace of the covariance of its (absolute or parent-relative) position."""
    return _positions(seq.frames, skeleton, mode).var(axis=0).sum(axis=-1)


def movement_velocity(seq: PoseSequence, skeleton: Skeleton, mode: str) -> np.ndarray:
    """Per joint: mean Euclidean displacement per frame."""
    if seq.num_frames < 2:
        raise DataError(f"sequence {seq.id}: velocity undefined for single-frame sequence")
    positions = _positions(seq.frames, skeleton, mode)
    return np.linalg.norm(np.diff(positions, axis=0), axis=-1).mean(axis=0)


def movement_deviation(pred: Dataset, ref: Dataset, kind: str, mode: str) -> GroupReport:
    """Relative deviation of a per-joint movement statistic, in percent.

    Joints whose reference statistic is below 1e-12 in a sequence are left out of
    that sequence's average and counted in ``excluded``.
    """
    if kind not in KINDS:
        raise DataError(f"kind must be one of {KINDS}, got {kind!r}")
    stat = movement_variance if kind == "variance" else movement_velocity
    skeleton = ref.skeleton
    n = skeleton.num_joints
    sums = np.zeros(n)
    counts = np.zeros(n, dtype=int)
    excluded = np.zeros(n, dtype=int)
    for p, r in pair_sequences(pred, ref):
        if kind == "velocity" and p.num_frames < 2:
            # a generation that stopped after one frame never moves
            p_stat = np.zeros(n)
        else:
            p_stat = stat(p, skeleton, mode)
        r_stat = stat(r, skeleton, mode)
        keep = r_stat >= MIN_REFERENCE_STAT
        dev = np.abs(p_stat - r_stat) / np.maximum(r_stat, MIN_REFERENCE_STAT) * 100.0
        sums[keep] += dev[keep]
        counts[keep] += 1
        excluded[~keep] += 1
    values = {j: float(sums[j] / counts[j]) for j in range(n) if counts[j]}
    return _group_report(values, {j: int(excluded[j]) for j in range(n)}, skeleton)


def frame_length_stats(pred: Dataset, ref: Dataset) -> FrameLengthStats:
    pairs = pair_sequences(pred, ref)
    pred_len = np.array([p.num_frames for p, _ in pairs], dtype=float)
    ref_len = np.array([r.num_frames for _, r in pairs], dtype=float)
    if not pairs:
        empty = np.zeros(0)
        return FrameLengthStats(0.0, 0.0, 0.0, 0.0, empty, empty.astype(int), empty.astype(int))
    signed = (pred_len - ref_len) / ref_len * 100.0
    pooled = np.concatenate([pred_len, ref_len])
    span = (float(pooled.min()), float(pooled.max()))
    pred_counts, edges = np.histogram(pred_len, bins=HISTOGRAM_BINS, range=span)
    ref_counts, _ = np.histogram(ref_len, bins=edges)
    return FrameLengthStats(
        mean_signed_rel_diff=float(signed.mean()),
        mean_abs_rel_diff=float(np.abs(signed).mean()),
        mean_pred_length=float(pred_len.mean()),
        mean_ref_length=float(ref_len.mean()),
        bin_edges=edges,
        pred_counts=pred_counts,
        ref_counts=ref_counts,
    )


def evaluate(pred: Dataset, ref: Dataset) -> EvaluationReport:
    return EvaluationReport(
        bone_length=bone_length_deviation(pred, ref),
        variance_global=movement_deviation(pred, ref, "variance", "global"),
        variance_local=movement_deviation(pred, ref, "variance", "local"),
        velocity_global=movement_deviation(pred, ref, "velocity", "global"),
        velocity_local=movement_deviation(pred, ref, "velocity", "local"),
        frame_length=frame_length_stats(pred, ref),
    )


def relative_reduction(baseline: float, improved: float) -> float:
    """How much smaller ``improved`` is than ``baseline``, in percent of ``baseline``."""
    if baseline == 0.0:
        return 0.0 if improved == 0.0 else float("nan")
    return (baseline - improved) / baseline * 100.0


def gap_closure(baseline: float, improved: float, oracle: float) -> float:
    """Share of the baseline-to-oracle gap closed by ``improved``, in percent."""
    if oracle == baseline:
        raise DataError("gap closure is undefined when oracle equals baseline")
    return (improved - baseline) / (oracle - baseline) * 100.0

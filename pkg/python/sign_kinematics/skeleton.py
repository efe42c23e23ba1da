"""Skeletal topology, link (bone) decomposition, and the six-group bone taxonomy.

Bone ``k`` is identified by its child joint ``bones[k]``; its link vector is
``p[child] - p[parent]``. Group labels attach to child joints, so a joint's
group names the bone that ends at it.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ParseError, ShapeMismatchError, TopologyError

GROUP_NAMES = ("neck", "shoulder", "upper_arm", "lower_arm", "palm", "finger")
SIDE_CHAIN = ("shoulder", "elbow", "wrist", "palm", "finger_1", "finger_2")
SIDE_CHAIN_GROUPS = ("shoulder", "upper_arm", "lower_arm", "palm", "finger", "finger")
MIN_REFERENCE_BONE = 1e-8


@dataclass(frozen=True)
class Skeleton:
    joint_names: tuple[str, ...]
    parents: tuple[int, ...]
    groups: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))
        object.__setattr__(
            self, "groups", {name: tuple(int(j) for j in idx) for name, idx in self.groups.items()}
        )

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    @property
    def num_bones(self) -> int:
        return len(self.bones)

    @cached_property
    def root(self) -> int:
        roots = [i for i, p in enumerate(self.parents) if p == -1]
        if len(roots) != 1:
            raise TopologyError(f"skeleton has {len(roots)} roots, expected 1")
        return roots[0]

    @cached_property
    def bones(self) -> np.ndarray:
        """Child joint of each bone: every non-root joint in canonical order."""
        return np.array([i for i, p in enumerate(self.parents) if p != -1], dtype=np.intp)

    @cached_property
    def bone_parents(self) -> np.ndarray:
        return np.array([self.parents[j] for j in self.bones], dtype=np.intp)

    @cached_property
    def traversal_order(self) -> tuple[int, ...]:
        """Joints ordered so every parent precedes its children (BFS from the root)."""
        children: dict[int, list[int]] = {i: [] for i in range(self.num_joints)}
        for i, p in enumerate(self.parents):
            if p != -1:
                children[p].append(i)
        order = [self.root]
        for joint in order:
            order.extend(children[joint])
        return tuple(order)

    @cached_property
    def joint_group(self) -> dict[int, str]:
        return {j: name for name, members in self.groups.items() for j in members}

    def to_dict(self) -> dict:
        return {
            "joint_names": list(self.joint_names),
            "parents": list(self.parents),
            "groups": {name: list(self.groups[name]) for name in self.groups},
        }


@dataclass(frozen=True)
class TopologyReport:
    violations: tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class LinkSet:
    root_position: np.ndarray
    links: np.ndarray


def validate_topology(skeleton: Skeleton) -> TopologyReport:
    """Check every skeleton invariant and report all violations at once."""
    names, parents = skeleton.joint_names, skeleton.parents
    n = len(parents)
    violations: list[str] = []

    if len(names) != n:
        violations.append(f"{len(names)} joint names but {n} parent entries")
    seen_names: set[str] = set()
    for name in names:
        if name in seen_names:
            violations.append(f"duplicate joint name {name!r}")
        seen_names.add(name)

    in_range = True
    self_parented: set[int] = set()
    for i, p in enumerate(parents):
        if p == i:
            self_parented.add(i)
            violations.append(f"joint {i} is its own parent")
        elif p != -1 and not 0 <= p < n:
            violations.append(f"joint {i} has out-of-range parent {p}")
            in_range = False

    roots = [i for i, p in enumerate(parents) if p == -1]
    if not roots:
        violations.append("no root: no joint has parent -1")
    elif len(roots) > 1:
        violations.append(f"multiple roots: joints {roots}")

    if in_range:
        on_cycle: set[int] = set()
        for start in range(n):
            path: list[int] = []
            j = start
            while j != -1 and j not in path and j not in on_cycle:
                path.append(j)
                j = parents[j]
            if j != -1 and j in path:
                cycle = path[path.index(j) :]
                reported = cycle == [j] and j in self_parented
                if not reported and not on_cycle.intersection(cycle):
                    violations.append(f"cycle through joints {sorted(cycle)}")
                on_cycle.update(cycle)

        if len(roots) == 1 and not on_cycle:
            children: dict[int, list[int]] = {i: [] for i in range(n)}
            for i, p in enumerate(parents):
                if p != -1:
                    children[p].append(i)
            visited = [0] * n
            stack = [roots[0]]
            while stack:
                j = stack.pop()
                visited[j] += 1
                stack.extend(children[j])
            unreached = [i for i in range(n) if visited[i] == 0]
            if unreached:
                violations.append(f"joints {unreached} unreachable from root")

    labelled: dict[int, str] = {}
    for group, members in skeleton.groups.items():
        if group not in GROUP_NAMES:
            violations.append(f"unknown bone group {group!r}")
        for j in members:
            if not 0 <= j < n:
                violations.append(f"group {group!r} names out-of-range joint {j}")
            elif parents[j] == -1:
                violations.append(f"root joint {j} is labelled {group!r}; only bones carry groups")
            elif j in labelled:
                violations.append(f"joint {j} labelled both {labelled[j]!r} and {group!r}")
            else:
                labelled[j] = group
    for i, p in enumerate(parents):
        if p != -1 and i not in labelled:
            violations.append(f"unlabeled bone: joint {i} belongs to no group")

    return TopologyReport(tuple(violations))


def _check_joint_axis(array: np.ndarray, skeleton: Skeleton, what: str) -> None:
    if array.ndim < 2 or array.shape[-2:] != (skeleton.num_joints, 3):
        raise ShapeMismatchError(
            f"{what} has shape {array.shape}, expected (..., {skeleton.num_joints}, 3)"
        )


def compute_links(pose: np.ndarray, skeleton: Skeleton) -> LinkSet:
    pose = np.asarray(pose, dtype=float)
    _check_joint_axis(pose, skeleton, "pose")
    if pose.ndim != 2:
        raise ShapeMismatchError(f"pose must be N x 3, got shape {pose.shape}")
    return LinkSet(
        root_position=pose[skeleton.root].copy(),
        links=pose[skeleton.bones] - pose[skeleton.bone_parents],
    )


def reconstruct_pose(link_set: LinkSet, skeleton: Skeleton) -> np.ndarray:
    """Inverse of :func:`compute_links`: accumulate links outward from the root."""
    links = np.asarray(link_set.links, dtype=float)
    if links.shape != (skeleton.num_bones, 3):
        raise ShapeMismatchError(
            f"link set has shape {links.shape}, expected ({skeleton.num_bones}, 3)"
        )
    bone_of = {int(j): k for k, j in enumerate(skeleton.bones)}
    pose = np.zeros((skeleton.num_joints, 3))
    pose[skeleton.root] = link_set.root_position
    for joint in skeleton.traversal_order[1:]:
        pose[joint] = pose[skeleton.parents[joint]] + links[bone_of[joint]]
    return pose


def frame_links(frames: np.ndarray, skeleton: Skeleton) -> np.ndarray:
    """Link vectors for a stack of poses: (..., N, 3) -> (..., N-1, 3)."""
    frames = np.asarray(frames, dtype=float)
    _check_joint_axis(frames, skeleton, "frames")
    return frames[..., skeleton.bones, :] - frames[..., skeleton.bone_parents, :]


def bone_lengths(frames: np.ndarray, skeleton: Skeleton) -> np.ndarray:
    return np.linalg.norm(frame_links(frames, skeleton), axis=-1)


def relative_positions(frames: np.ndarray, skeleton: Skeleton) -> np.ndarray:
    """Per-joint local coordinates: link vector for bones, absolute position for the root."""
    frames = np.asarray(frames, dtype=float)
    _check_joint_axis(frames, skeleton, "frames")
    local = frames.copy()
    local[..., skeleton.bones, :] = frame_links(frames, skeleton)
    return local


def default_skeleton() -> Skeleton:
    """16-joint upper-body skeleton rooted at the lower neck, two fingers per hand."""
    names = ["lower_neck", "upper_neck", "head", "nose"]
    parents = [-1, 0, 1, 2]
    groups: dict[str, list[int]] = {g: [] for g in GROUP_NAMES}
    groups["neck"] += [1, 2, 3]
    for side in ("l", "r"):
        base = len(names)
        names += [f"{side}_{part}" for part in SIDE_CHAIN]
        parents += [0, base, base + 1, base + 2, base + 3, base + 4]
        for offset, group in enumerate(SIDE_CHAIN_GROUPS):
            groups[group].append(base + offset)
    return Skeleton(tuple(names), tuple(parents), groups)


def load_skeleton(path: Path | str) -> Skeleton:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    for key in ("joint_names", "parents", "groups"):
        if key not in data:
            raise ParseError(f"{path}: missing field {key!r}")
    skeleton = skeleton_from_dict(data)
    report = validate_topology(skeleton)
    if not report.valid:
        raise TopologyError(f"{path}: " + "; ".join(report.violations))
    return skeleton


def skeleton_from_dict(data: Mapping) -> Skeleton:
    return Skeleton(
        tuple(str(n) for n in data["joint_names"]),
        tuple(int(p) for p in data["parents"]),
        {str(g): tuple(int(j) for j in members) for g, members in data["groups"].items()},
    )


def save_skeleton(skeleton: Skeleton, path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(skeleton.to_dict(), f, indent=2)
        f.write("\n")

"""Tests for the CSV/SVG report writer."""

from __future__ import annotations

import csv

import numpy as np

from sign_kinematics.metrics import evaluate
from sign_kinematics.posedata import Dataset, PoseSequence
from sign_kinematics.report import FRAME_COLUMNS, GROUP_COLUMNS, emit_report
from sign_kinematics.skeleton import default_skeleton

EXPECTED_FILES = sorted(
    f"{name}.{ext}"
    for name in (
        "bone_length",
        "variance_global",
        "variance_local",
        "velocity_global",
        "velocity_local",
        "frame_length",
    )
    for ext in ("csv", "svg")
)


def _pair():
    rng = np.random.default_rng(11)
    skeleton = default_skeleton()
    ref = Dataset(
        skeleton, [PoseSequence(rng.normal(size=(5, 16, 3)), (), f"s{i}") for i in range(3)]
    )
    pred = Dataset(
        skeleton,
        [PoseSequence(s.frames + 0.1 * rng.normal(size=s.frames.shape), (), s.id) for s in ref],
    )
    return pred, ref


def _read(path):
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


def test_writes_twelve_files(tmp_path):
    pred, ref = _pair()
    written = emit_report(evaluate(pred, ref), tmp_path)
    assert len(written) == 12
    assert sorted(p.name for p in tmp_path.iterdir()) == EXPECTED_FILES


def test_byte_deterministic(tmp_path):
    pred, ref = _pair()
    report = evaluate(pred, ref)
    emit_report(report, tmp_path / "a")
    emit_report(report, tmp_path / "b")
    for name in EXPECTED_FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_group_csv_rows(tmp_path):
    pred, ref = _pair()
    emit_report(evaluate(pred, ref), tmp_path)
    rows = _read(tmp_path / "bone_length.csv")
    assert rows[0] == GROUP_COLUMNS
    kinds = [r[1] for r in rows[1:]]
    assert kinds[:7] == ["group"] * 6 + ["overall"]
    assert kinds[7:] == ["joint"] * 15
    overall = rows[7]
    assert float(overall[2]) > 0.0
    assert overall[3] == "15"


def test_frame_csv(tmp_path):
    pred, ref = _pair()
    emit_report(evaluate(pred, ref), tmp_path)
    rows = _read(tmp_path / "frame_length.csv")
    assert rows[0] == FRAME_COLUMNS
    assert rows[1][0] == "all"
    assert float(rows[1][6]) == 0.0
    assert len(rows) == 2 + 20


def test_empty_input_gives_header_only_tables(tmp_path):
    empty = Dataset(default_skeleton(), [])
    written = emit_report(evaluate(empty, empty), tmp_path)
    assert len(written) == 12
    for path in written:
        if path.suffix == ".csv":
            assert len(_read(path)) == 1
        else:
            assert path.stat().st_size > 0

"""Tests for the synthetic motion-primitive corpus."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from _project_root import CONFIGS_DIR
from sign_kinematics.common import load_json_config
from sign_kinematics.errors import ConfigError
from sign_kinematics.skeleton import bone_lengths, default_skeleton
from sign_kinematics.synth import (
    DEFAULT_BONE_LENGTHS,
    SynthConfig,
    _rest_links,
    angles_to_frames,
    joint_angle_trajectory,
    primitive_for,
    synthesize_dataset,
)


def _small_config(num: int = 10) -> SynthConfig:
    return SynthConfig(num_sequences=num)


class TestSynthesizeDataset:
    def test_deterministic(self):
        a = synthesize_dataset(_small_config(), seed=42)
        b = synthesize_dataset(_small_config(), seed=42)
        assert a.ids == b.ids
        for x, y in zip(a, b, strict=True):
            assert x.tokens == y.tokens
            np.testing.assert_array_equal(x.frames, y.frames)

    def test_bone_lengths_match_config(self):
        dataset = synthesize_dataset(_small_config(), seed=42)
        skeleton = dataset.skeleton
        expected = np.array(
            [
                DEFAULT_BONE_LENGTHS[name[2:] if name[:2] in ("l_", "r_") else name]
                for name in (skeleton.joint_names[j] for j in skeleton.bones)
            ]
        )
        for seq in dataset:
            np.testing.assert_allclose(
                bone_lengths(seq.frames, skeleton),
                np.tile(expected, (seq.num_frames, 1)),
                rtol=0,
                atol=1e-10,
            )

    def test_splits_are_independent(self):
        train = synthesize_dataset(_small_config(3), seed=42, split="train")
        test = synthesize_dataset(_small_config(3), seed=42, split="test")
        assert test.ids == ["test_00000", "test_00001", "test_00002"]
        assert any(
            not np.array_equal(a.frames, b.frames) for a, b in zip(train, test, strict=True)
        )

    def test_token_count_and_vocabulary(self):
        config = _small_config(50)
        for seq in synthesize_dataset(config, seed=7):
            assert 1 <= len(seq.tokens) <= 3
            assert set(seq.tokens) <= set(config.vocabulary)


class TestTrajectories:
    def test_token_order_matters(self):
        skeleton = default_skeleton()
        rest = _rest_links(skeleton, DEFAULT_BONE_LENGTHS)
        wave, nod = primitive_for("wave_left", skeleton), primitive_for("nod", skeleton)
        lengths = [30, 30]
        ab = joint_angle_trajectory([wave, nod], lengths, skeleton.num_bones)
        ba = joint_angle_trajectory([nod, wave], lengths, skeleton.num_bones)
        root = np.zeros((60, 3))
        assert not np.allclose(
            angles_to_frames(ab, root, skeleton, rest), angles_to_frames(ba, root, skeleton, rest)
        )

    def test_primitive_depends_only_on_name(self):
        skeleton = default_skeleton()
        a, b = primitive_for("clap", skeleton), primitive_for("clap", skeleton)
        assert a.duration == b.duration
        np.testing.assert_array_equal(a.target, b.target)

    def test_one_sided_primitive_leaves_other_arm_still(self):
        skeleton = default_skeleton()
        prim = primitive_for("point_left", skeleton)
        for k, joint in enumerate(skeleton.bones):
            if skeleton.joint_names[joint].startswith("r_"):
                np.testing.assert_array_equal(prim.target[k], 0.0)


class TestSynthConfig:
    def test_shipped_config_matches_defaults(self):
        config = SynthConfig.from_dict(load_json_config(CONFIGS_DIR / "synth_default.json"))
        assert config == SynthConfig()

    def test_round_trip(self):
        config = replace(SynthConfig(), num_sequences=5)
        assert SynthConfig.from_dict(config.to_dict()) == config

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            SynthConfig.from_dict({"num_sequence": 5})

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            SynthConfig(num_sequences=0)
        with pytest.raises(ConfigError):
            SynthConfig(bone_lengths={"elbow": -1.0})
        with pytest.raises(ConfigError):
            SynthConfig(vocabulary=("nod", "nod"))

"""Tests for config loading, digests and run manifests."""

from __future__ import annotations

import json

import pytest

from sign_kinematics import __version__, version
from sign_kinematics.common import (
    check_keys,
    config_digest,
    file_digest,
    load_json_config,
    write_manifest,
)
from sign_kinematics.errors import (
    ConfigError,
    DataError,
    DivergenceError,
    ModelFormatError,
    ParseError,
    UsageError,
)


class TestLoadJsonConfig:
    def test_strips_metadata_keys(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"_provenance": "x", "_note": 1, "epochs": 3}), encoding="utf-8")
        assert load_json_config(path) == {"epochs": 3}

    def test_parse_error_names_line(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{\n  "epochs": 3,\n}\n', encoding="utf-8")
        with pytest.raises(ParseError, match="c.json:3"):
            load_json_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_json_config(tmp_path / "nope.json")

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_json_config(path)


def test_check_keys_lists_unknown_keys():
    check_keys("train", {"epochs": 1}, {"epochs", "seed"})
    with pytest.raises(ConfigError, match="train: unknown key\\(s\\) a, b"):
        check_keys("train", {"b": 1, "a": 2, "epochs": 1}, {"epochs"})


class TestDigests:
    def test_config_digest_ignores_key_order(self):
        assert config_digest({"a": 1, "b": {"c": 2}}) == config_digest({"b": {"c": 2}, "a": 1})
        assert config_digest({"a": 1}) != config_digest({"a": 2})

    def test_file_digest(self, tmp_path):
        path = tmp_path / "f.bin"
        path.write_bytes(b"")
        expected = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        assert file_digest(path) == expected


class TestManifest:
    def _write(self, path):
        write_manifest(
            path,
            experiment_name="ablation",
            seed=42,
            base_config={"epochs": 2},
            variant_overrides={"baseline": {}, "bone": {"coefficients": {"beta": 1.0}}},
            inputs={"train.jsonl": "abc"},
        )

    def test_deterministic(self, tmp_path):
        self._write(tmp_path / "a" / "manifest.json")
        self._write(tmp_path / "b" / "manifest.json")
        a = (tmp_path / "a" / "manifest.json").read_bytes()
        assert a == (tmp_path / "b" / "manifest.json").read_bytes()

    def test_contents(self, tmp_path):
        self._write(tmp_path / "manifest.json")
        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["seed"] == 42
        assert manifest["base_config_digest"] == config_digest({"epochs": 2})
        digests = manifest["variant_config_digests"]
        assert digests["baseline"] == manifest["base_config_digest"]
        assert digests["bone"] != digests["baseline"]
        assert "timestamp" not in json.dumps(manifest)


class TestErrors:
    @pytest.mark.parametrize(
        ("error", "code"),
        [(UsageError, 1), (ConfigError, 1), (ParseError, 2), (DivergenceError, 3)],
    )
    def test_exit_codes(self, error, code):
        assert error("x").exit_code == code

    def test_data_errors_are_value_errors(self):
        assert issubclass(DataError, ValueError)
        assert issubclass(ModelFormatError, RuntimeError)


def test_version():
    assert version() == __version__

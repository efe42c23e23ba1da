"""Shared helpers: progress logging, JSON config loading, digests, run manifests."""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

from .errors import ConfigError, ParseError


def log(msg: str) -> None:
    """Write a message to stderr for progress reporting."""
    print(msg, file=sys.stderr)


def load_json_config(path: Path | str) -> dict:
    """Load a JSON config file, dropping metadata keys that begin with '_'."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return strip_metadata(data)


def strip_metadata(data: dict) -> dict:
    return {k: v for k, v in data.items() if not k.startswith("_")}


def check_keys(section: str, data: dict, allowed: set[str]) -> None:
    """Reject keys outside ``allowed``."""
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(unknown)}")


def sorted_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_digest(config: dict) -> str:
    return hashlib.sha256(sorted_json(config).encode("utf-8")).hexdigest()


def write_manifest(
    out_path: Path,
    *,
    experiment_name: str,
    seed: int,
    base_config: dict,
    variant_overrides: dict[str, dict],
    inputs: dict[str, str],
) -> None:
    """Write a run manifest.

    No timestamps or commit ids are recorded: identical inputs must give
    byte-identical manifests.
    """
    out_path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema_version": 1,
        "experiment_name": experiment_name,
        "seed": seed,
        "base_config": base_config,
        "base_config_digest": config_digest(base_config),
        "variant_overrides": variant_overrides,
        "variant_config_digests": {
            name: config_digest({**base_config, **overrides})
            for name, overrides in variant_overrides.items()
        },
        "inputs": inputs,
    }
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def file_digest(path: Path | str) -> str:
    """SHA-256 of a file's bytes, for recording run inputs in a manifest."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()

"""Ablation harness: train each variant with a shared seed, evaluate, tabulate.

Each variant starts from the base training config and may override the loss
coefficients, the termination settings, and two switches:

* ``joint_weights``: parent-relative joint weights from the training split
  (otherwise all ones);
* ``bone_length_reweighting``: bone-length lambdas from a lambda-free first
  training pass, measured on teacher-forced dev predictions (otherwise all ones).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .common import check_keys, load_json_config, log, write_manifest
from .errors import ConfigError
from .metrics import EvaluationReport, evaluate, relative_reduction
from .model import (
    TrainConfig,
    generate_dataset,
    init_model,
    predict_teacher_forced,
    save_model,
    train,
    write_training_log,
)
from .posedata import Dataset, token_vocabulary
from .report import emit_report
from .weighting import (
    bone_length_lambda,
    joint_variances,
    parent_relative_weights,
    uniform_lambdas,
    uniform_weights,
)

METRIC_COLUMNS = [
    "bone_length_pct",
    "variance_global_pct",
    "variance_local_pct",
    "velocity_global_pct",
    "velocity_local_pct",
    "frame_length_abs_pct",
]
TABLE_COLUMNS = (
    ["variant", "termination", "joint_weights", "bone_length_reweighting", "final_loss"]
    + METRIC_COLUMNS
    + ["frame_length_signed_pct"]
    + [c.removesuffix("_pct") + "_reduction_pct" for c in METRIC_COLUMNS]
)
_VARIANT_KEYS = {"name", "coefficients", "termination", "joint_weights", "bone_length_reweighting"}


@dataclass(frozen=True)
class Variant:
    name: str
    coefficients: dict = field(default_factory=dict)
    termination: dict = field(default_factory=dict)
    joint_weights: bool = False
    bone_length_reweighting: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> Variant:
        check_keys("variant", data, _VARIANT_KEYS)
        if not data.get("name"):
            raise ConfigError("variant: every variant needs a name")
        return cls(**data)

    def overrides(self) -> dict:
        return {
            "coefficients": dict(self.coefficients),
            "termination": dict(self.termination),
            "joint_weights": self.joint_weights,
            "bone_length_reweighting": self.bone_length_reweighting,
        }

    def train_config(self, base: TrainConfig, seed: int) -> TrainConfig:
        merged = base.to_dict()
        merged["seed"] = seed
        merged["coefficients"] = {**merged["coefficients"], **self.coefficients}
        merged["termination"] = {**merged["termination"], **self.termination}
        return TrainConfig.from_dict(merged)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    base: TrainConfig
    variants: tuple[Variant, ...]

    def __post_init__(self) -> None:
        if not self.variants:
            raise ConfigError("experiment: at least one variant is required")
        names = [v.name for v in self.variants]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ConfigError(f"experiment: duplicate variant name(s) {', '.join(duplicates)}")

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        check_keys("experiment", data, {"name", "base", "variants"})
        return cls(
            name=data.get("name", "experiment"),
            base=TrainConfig.from_dict(data.get("base", {})),
            variants=tuple(Variant.from_dict(v) for v in data.get("variants", [])),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base": self.base.to_dict(),
            "variants": [{"name": v.name, **v.overrides()} for v in self.variants],
        }


def load_experiment_config(path: Path | str) -> ExperimentConfig:
    return ExperimentConfig.from_dict(load_json_config(path))


def metric_row(report: EvaluationReport) -> dict[str, float]:
    return {
        "bone_length_pct": report.bone_length.overall,
        "variance_global_pct": report.variance_global.overall,
        "variance_local_pct": report.variance_local.overall,
        "velocity_global_pct": report.velocity_global.overall,
        "velocity_local_pct": report.velocity_local.overall,
        "frame_length_abs_pct": report.frame_length.mean_abs_rel_diff,
        "frame_length_signed_pct": report.frame_length.mean_signed_rel_diff,
    }


def run_variant(
    variant: Variant,
    config: TrainConfig,
    train_set: Dataset,
    dev_set: Dataset,
    test_set: Dataset,
    out_dir: Path,
) -> dict:
    skeleton = train_set.skeleton
    vocabulary = token_vocabulary(train_set, dev_set, test_set)
    if variant.joint_weights:
        weights = parent_relative_weights(joint_variances(train_set))
    else:
        weights = uniform_weights(skeleton.num_joints)
    lambdas = uniform_lambdas(skeleton.num_bones)

    if variant.bone_length_reweighting:
        log(f"[{variant.name}] phase 1: lambda-free pass")
        first = train(
            init_model(config, vocabulary, skeleton.num_joints), train_set, config, weights, lambdas
        )
        lambdas = bone_length_lambda(predict_teacher_forced(first.model, dev_set), dev_set)

    log(f"[{variant.name}] training")
    result = train(
        init_model(config, vocabulary, skeleton.num_joints), train_set, config, weights, lambdas
    )
    variant_dir = out_dir / variant.name
    save_model(result.model, variant_dir / "model.sgkt")
    write_training_log(result.log, variant_dir / "training_log.csv")

    generated = generate_dataset(result.model, test_set, config.termination)
    report = evaluate(generated, test_set)
    emit_report(report, variant_dir / "report")
    return {
        "variant": variant.name,
        "termination": config.termination.mode,
        "joint_weights": variant.joint_weights,
        "bone_length_reweighting": variant.bone_length_reweighting,
        "final_loss": result.log[-1].total,
        **metric_row(report),
    }


def add_reductions(rows: list[dict]) -> list[dict]:
    """Per-metric reduction relative to the first (baseline) row."""
    baseline = rows[0]
    for row in rows:
        for col in METRIC_COLUMNS:
            key = col.removesuffix("_pct") + "_reduction_pct"
            row[key] = relative_reduction(baseline[col], row[col])
    return rows


def write_table(rows: list[dict], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row[col]) for col in TABLE_COLUMNS])


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_experiment(
    config: ExperimentConfig,
    seed: int,
    train_set: Dataset,
    dev_set: Dataset,
    test_set: Dataset,
    out_dir: Path | str,
    inputs: dict[str, str] | None = None,
) -> list[dict]:
    """Run every variant; writes ``ablation.csv`` and ``manifest.json`` under ``out_dir``."""
    out_dir = Path(out_dir)
    rows = []
    for variant in config.variants:
        variant_config = variant.train_config(config.base, seed)
        rows.append(run_variant(variant, variant_config, train_set, dev_set, test_set, out_dir))
    add_reductions(rows)
    write_table(rows, out_dir / "ablation.csv")
    write_manifest(
        out_dir / "manifest.json",
        experiment_name=config.name,
        seed=seed,
        base_config=config.base.to_dict(),
        variant_overrides={v.name: v.overrides() for v in config.variants},
        inputs=inputs or {},
    )
    log(f"wrote {len(rows)} variant row(s) to {out_dir / 'ablation.csv'}")
    return rows

"""Desk-scale ablation: seven loss/termination variants on the default synthetic split.

Synthesises 200 train / 50 dev / 50 test sequences with seed 42, then trains and
evaluates every variant in configs/ablation.json with the same seed.

Usage:
    uv run python scripts/experiment_ablation.py [--seed 42] [--out experiments/ablation]

Output: experiments/ablation/ablation.csv, manifest.json, and one directory per
variant (model, training log, report). Progress goes to stderr.
"""

from __future__ import annotations

import argparse
from dataclasses import replace
from pathlib import Path

import sign_kinematics
from _project_root import CONFIGS_DIR, EXPERIMENTS_DIR
from sign_kinematics.common import config_digest, log
from sign_kinematics.experiment import load_experiment_config, run_experiment
from sign_kinematics.synth import load_synth_config, synthesize_dataset

SEED = 42
SPLIT_SIZES = {"train": 200, "dev": 50, "test": 50}


def parse_args():
    parser = argparse.ArgumentParser(description="Run the desk-scale ablation experiment.")
    parser.add_argument("--seed", type=int, default=SEED, help=f"Random seed. Default: {SEED}")
    parser.add_argument(
        "--config",
        type=Path,
        default=CONFIGS_DIR / "ablation.json",
        help="Experiment config. Default: configs/ablation.json",
    )
    parser.add_argument(
        "--out",
        type=Path,
        default=EXPERIMENTS_DIR / "ablation",
        help="Output directory. Default: experiments/ablation",
    )
    return parser.parse_args()


def main():
    args = parse_args()
    log(f"Sign Kinematics v{sign_kinematics.version()}")
    synth = load_synth_config(CONFIGS_DIR / "synth_default.json")
    splits = {
        split: synthesize_dataset(replace(synth, num_sequences=n), args.seed, split)
        for split, n in SPLIT_SIZES.items()
    }
    log(
        "Ablation: "
        + ", ".join(f"{split}={len(ds)}" for split, ds in splits.items())
        + f", seed {args.seed}"
    )
    inputs = {"synth_config": config_digest(synth.to_dict())}
    inputs.update({f"{split}_sequences": str(n) for split, n in SPLIT_SIZES.items()})
    run_experiment(
        load_experiment_config(args.config),
        args.seed,
        splits["train"],
        splits["dev"],
        splits["test"],
        args.out,
        inputs=inputs,
    )


if __name__ == "__main__":
    main()

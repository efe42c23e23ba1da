"""Command-line front door: ``sign-kinematics <subcommand> ...``.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 runtime failure.
Every subcommand logs its resolved configuration to stderr before doing work.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .common import file_digest, log, sorted_json
from .errors import SignKinematicsError, TrainingError, UsageError
from .experiment import load_experiment_config, run_experiment
from .losses import (
    bone_length_loss,
    bone_pose_loss,
    eos_loss_from_logits,
    gradient_check,
    sample_nonkink_instance,
    weighted_mse_loss,
)
from .metrics import evaluate
from .model import (
    TrainConfig,
    generate_dataset,
    init_model,
    load_model,
    load_train_config,
    predict_teacher_forced,
    save_model,
    train,
    write_training_log,
)
from .posedata import SKELETON_FILENAME, load_dataset, save_dataset, token_vocabulary
from .report import emit_report
from .skeleton import default_skeleton, save_skeleton
from .synth import SynthConfig, load_synth_config, synthesize_dataset
from .termination import TerminationConfig
from .weighting import (
    BoneLambdas,
    JointWeights,
    bone_length_lambda,
    joint_variances,
    load_lambdas,
    load_weights,
    parent_relative_weights,
    save_lambdas,
    save_weights,
)

DATA_FORMAT = (
    "Datasets are JSON Lines, one sequence per line: "
    '{"id": ..., "tokens": [...], "frames": [[[x, y, z], ...], ...]}, '
    f"with the skeleton in {SKELETON_FILENAME} beside the dataset file."
)
GRADCHECK_TOLERANCES = {"mse": 1e-7, "bone_length": 1e-5, "bone_pose": 1e-5, "eos": 1e-5}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _log_config(command: str, config: dict) -> None:
    log(f"{command} config: {sorted_json(config)}")


def _plain(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


def _args_dict(args: argparse.Namespace) -> dict:
    return {k: _plain(v) for k, v in vars(args).items() if k != "handler"}


def cmd_synth(args: argparse.Namespace) -> None:
    config = load_synth_config(args.config) if args.config else SynthConfig()
    if args.num is not None:
        config = replace(config, num_sequences=args.num)
    _log_config("synth", {"seed": args.seed, "synth": config.to_dict(), "args": _args_dict(args)})
    args.out.mkdir(parents=True, exist_ok=True)
    save_skeleton(default_skeleton(), args.out / SKELETON_FILENAME)
    counts = {"train": config.num_sequences, "dev": args.dev_num, "test": args.test_num}
    for split, count in counts.items():
        if count == 0:
            continue
        dataset = synthesize_dataset(replace(config, num_sequences=count), args.seed, split)
        save_dataset(dataset, args.out / f"{split}.jsonl", write_skeleton=False)
        log(f"wrote {count} {split} sequence(s) to {args.out / f'{split}.jsonl'}")


def cmd_weights(args: argparse.Namespace) -> None:
    _log_config("weights compute", _args_dict(args))
    weights = parent_relative_weights(joint_variances(load_dataset(args.data)))
    save_weights(weights, args.out)
    log(f"wrote {weights.w.size} joint weight(s) to {args.out}")


def cmd_lambda(args: argparse.Namespace) -> None:
    _log_config("lambda compute", _args_dict(args))
    ref = load_dataset(args.ref)
    pred = load_dataset(args.pred, skeleton=ref.skeleton, split=ref.split)
    lambdas = bone_length_lambda(pred, ref)
    save_lambdas(lambdas, args.out)
    log(f"wrote {lambdas.lam.size} bone lambda(s) to {args.out}")


def _train_config(args: argparse.Namespace) -> TrainConfig:
    config = load_train_config(args.config) if args.config else TrainConfig()
    updates = {"seed": args.seed}
    if args.epochs is not None:
        updates["epochs"] = args.epochs
    if args.weights is not None:
        updates["weights_path"] = str(args.weights)
    if args.lambdas is not None:
        updates["lambdas_path"] = str(args.lambdas)
    if args.mode is not None:
        updates["termination"] = replace(config.termination, mode=args.mode)
    return replace(config, **updates)


def cmd_train(args: argparse.Namespace) -> None:
    config = _train_config(args)
    _log_config("train", {"train": config.to_dict(), "args": _args_dict(args)})
    dataset = load_dataset(args.data)
    weights: JointWeights | None = load_weights(args.weights) if args.weights else None
    lambdas: BoneLambdas | None = load_lambdas(args.lambdas) if args.lambdas else None
    extra = [load_dataset(path, skeleton=dataset.skeleton) for path in args.vocab_data]
    vocabulary = token_vocabulary(dataset, *extra)
    model = init_model(config, vocabulary, dataset.skeleton.num_joints)
    result = train(model, dataset, config, weights, lambdas)
    save_model(result.model, args.out)
    if args.log:
        write_training_log(result.log, args.log)
    log(f"wrote model to {args.out}")


def _termination(args: argparse.Namespace) -> TerminationConfig:
    termination = (
        load_train_config(args.config).termination if args.config else TerminationConfig()
    )
    updates = {}
    for flag, key in (("mode", "mode"), ("tau", "tau"), ("max_frames", "max_frames")):
        if getattr(args, flag) is not None:
            updates[key] = getattr(args, flag)
    return replace(termination, **updates)


def cmd_generate(args: argparse.Namespace) -> None:
    termination = _termination(args)
    _log_config("generate", {"termination": termination.to_dict(), "args": _args_dict(args)})
    model = load_model(args.model)
    ref = load_dataset(args.data)
    if args.teacher_forced:
        pred = predict_teacher_forced(model, ref)
    else:
        pred = generate_dataset(model, ref, termination)
    save_dataset(pred, args.out)
    log(f"wrote {len(pred)} generated sequence(s) to {args.out}")


def cmd_eval(args: argparse.Namespace) -> None:
    _log_config("eval", _args_dict(args))
    ref = load_dataset(args.ref)
    pred = load_dataset(args.pred, skeleton=ref.skeleton, split=ref.split)
    written = emit_report(evaluate(pred, ref), args.out)
    log(f"wrote {len(written)} report file(s) to {args.out}")


def _instance_errors(skeleton, rng: np.random.Generator, num_frames: int) -> dict[str, float]:
    pred, ref = sample_nonkink_instance(rng, skeleton, num_frames)
    weights = JointWeights(rng.uniform(0.1, 1.0, skeleton.num_joints))
    lambdas = BoneLambdas(rng.uniform(0.1, 1.0, skeleton.num_bones))
    logits = rng.normal(size=num_frames)
    targets = (rng.random(num_frames) < 0.5).astype(float)
    return {
        "mse": gradient_check(lambda x: weighted_mse_loss(x, ref, weights), pred),
        "bone_length": gradient_check(lambda x: bone_length_loss(x, ref, skeleton, lambdas), pred),
        "bone_pose": gradient_check(lambda x: bone_pose_loss(x, ref, skeleton), pred),
        "eos": gradient_check(lambda x: eos_loss_from_logits(x, targets), logits),
    }


def run_gradcheck(seed: int, instances: int, num_frames: int) -> dict[str, float]:
    """Worst relative gradient error per loss over seeded non-kink instances."""
    skeleton = default_skeleton()
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(GRADCHECK_TOLERANCES, 0.0)
    for _ in range(instances):
        for name, err in _instance_errors(skeleton, rng, num_frames).items():
            worst[name] = max(worst[name], err)
    return worst


def cmd_gradcheck(args: argparse.Namespace) -> None:
    _log_config("gradcheck", _args_dict(args))
    worst = run_gradcheck(args.seed, args.instances, args.frames)
    failed = []
    for name, err in worst.items():
        tol = GRADCHECK_TOLERANCES[name]
        status = "ok" if err <= tol else "FAIL"
        print(f"{name}\t{err:.3e}\t{tol:.0e}\t{status}")
        if err > tol:
            failed.append(name)
    if failed:
        raise TrainingError(f"gradient check failed for {', '.join(failed)}")


def cmd_experiment(args: argparse.Namespace) -> None:
    config = load_experiment_config(args.config)
    _log_config(
        "experiment", {"experiment": config.to_dict(), "seed": args.seed, "args": _args_dict(args)}
    )
    splits = {}
    inputs = {"config": file_digest(args.config)}
    for split in ("train", "dev", "test"):
        path = args.data_dir / f"{split}.jsonl"
        splits[split] = load_dataset(path, split=split)
        inputs[f"{split}.jsonl"] = file_digest(path)
    run_experiment(
        config,
        args.seed,
        splits["train"],
        splits["dev"],
        splits["test"],
        args.out,
        inputs=inputs,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sign-kinematics",
        description="Skeletal-motion toolkit for text-to-sign pose generation.",
        epilog=DATA_FORMAT,
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="Generate a synthetic dataset.", epilog=DATA_FORMAT)
    p.add_argument("--seed", type=int, required=True, help="Random seed (required).")
    p.add_argument("--out", type=Path, required=True, help="Output directory.")
    p.add_argument("--num", type=int, help="Training sequences (default: from config).")
    p.add_argument("--dev-num", type=int, default=0, help="Dev sequences. Default: 0")
    p.add_argument("--test-num", type=int, default=0, help="Test sequences. Default: 0")
    p.add_argument("--config", type=Path, help="Synth config JSON (configs/synth_default.json).")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("weights", help="Joint-weight utilities.")
    wsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = wsub.add_parser(
        "compute",
        help="Parent-relative joint weights from a dataset.",
        epilog='Writes {"w": [...]} JSON, one weight per joint. ' + DATA_FORMAT,
    )
    p.add_argument("--data", type=Path, required=True, help="Training dataset (JSONL).")
    p.add_argument("--out", type=Path, required=True, help="Output weights JSON.")
    p.set_defaults(handler=cmd_weights)

    p = sub.add_parser("lambda", help="Bone-length lambda utilities.")
    lsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = lsub.add_parser(
        "compute",
        help="Bone-length lambdas from frame-aligned predictions.",
        epilog='Writes {"lambda": [...]} JSON, one factor per bone. ' + DATA_FORMAT,
    )
    p.add_argument("--pred", type=Path, required=True, help="Teacher-forced predictions.")
    p.add_argument("--ref", type=Path, required=True, help="Reference dataset.")
    p.add_argument("--out", type=Path, required=True, help="Output lambdas JSON.")
    p.set_defaults(handler=cmd_lambda)

    p = sub.add_parser(
        "train",
        help="Train the pose regressor.",
        epilog="Writes an SGKT model file and optionally a CSV training log. " + DATA_FORMAT,
    )
    p.add_argument("--data", type=Path, required=True, help="Training dataset (JSONL).")
    p.add_argument("--seed", type=int, required=True, help="Random seed (required).")
    p.add_argument("--out", type=Path, required=True, help="Output model file.")
    p.add_argument("--config", type=Path, help="Train config JSON (configs/train_default.json).")
    p.add_argument("--weights", type=Path, help="Joint weights JSON. Default: all ones")
    p.add_argument("--lambdas", type=Path, help="Bone lambdas JSON. Default: all ones")
    p.add_argument("--epochs", type=int, help="Override the configured epoch count.")
    p.add_argument("--mode", choices=["eos", "counter"], help="Termination mode override.")
    p.add_argument("--log", type=Path, help="CSV training log (epoch,total,mse,bone,pose,eos).")
    p.add_argument(
        "--vocab-data",
        type=Path,
        nargs="+",
        default=[],
        help="Further datasets (e.g. dev and test splits) whose tokens join the vocabulary.",
    )
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("generate", help="Generate poses for a dataset's token sequences.")
    p.add_argument("--model", type=Path, required=True, help="SGKT model file.")
    p.add_argument("--data", type=Path, required=True, help="Dataset whose ids/tokens to use.")
    p.add_argument("--out", type=Path, required=True, help="Output predictions (JSONL).")
    p.add_argument(
        "--teacher-forced",
        action="store_true",
        help="Predict each frame from the true previous frame (frame-aligned output).",
    )
    p.add_argument("--config", type=Path, help="Train config JSON supplying termination.")
    p.add_argument("--mode", choices=["eos", "counter"], help="Termination mode override.")
    p.add_argument("--tau", type=float, help="EOS threshold override.")
    p.add_argument("--max-frames", type=int, help="Hard cap on generated frames.")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser(
        "eval",
        help="Evaluate predictions against references.",
        epilog="Writes six CSV tables and six SVG charts. " + DATA_FORMAT,
    )
    p.add_argument("--pred", type=Path, required=True, help="Predicted dataset (JSONL).")
    p.add_argument("--ref", type=Path, required=True, help="Reference dataset (JSONL).")
    p.add_argument("--out", type=Path, required=True, help="Report directory.")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("gradcheck", help="Finite-difference check of every loss gradient.")
    p.add_argument("--seed", type=int, required=True, help="Random seed (required).")
    p.add_argument("--instances", type=int, default=100, help="Instances per loss. Default: 100")
    p.add_argument("--frames", type=int, default=3, help="Frames per instance. Default: 3")
    p.set_defaults(handler=cmd_gradcheck)

    p = sub.add_parser(
        "experiment",
        help="Run an ablation experiment.",
        epilog="Reads train/dev/test.jsonl from --data-dir; writes ablation.csv, "
        "manifest.json and one directory per variant.",
    )
    p.add_argument("--config", type=Path, required=True, help="Experiment config JSON.")
    p.add_argument("--data-dir", type=Path, required=True, help="Directory with split files.")
    p.add_argument("--seed", type=int, required=True, help="Random seed (required).")
    p.add_argument("--out", type=Path, required=True, help="Output directory.")
    p.set_defaults(handler=cmd_experiment)
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        log(f"sign-kinematics v{__version__}")
        args.handler(args)
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)
    except SignKinematicsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli())

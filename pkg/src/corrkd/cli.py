"""Command-line entry point.

Subcommands cover the full workflow: generate a synthetic dataset, train the
teacher, distill the student, score a single corruption condition, run the
robustness sweep, pretty-print a sweep report, and self-check the loss
implementations.  Values resolve as defaults < --preset < --config file <
individual flags, the resolved snapshot is saved next to the artifacts, and
a run manifest is written atomically on success.

Exit codes: 0 success, 1 bad usage or invalid inputs, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from corrkd import config as cfgmod
from corrkd.config import ConfigError
from corrkd.corruption import MissingnessError, MissingnessSpec
from corrkd.datasets import (
    Dataset,
    DatasetError,
    ModalitySample,
    generate_synthetic,
    load_dataset,
    save_dataset,
)
from corrkd.distill import (
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
    train_student,
    train_teacher,
)
from corrkd.evaluation import (
    evaluate_condition,
    format_report_table,
    read_report,
    report_header,
    robustness_sweep,
    write_report,
)
from corrkd.oracles import run_loss_oracles

_USAGE_ERRORS = (ConfigError, DatasetError, MissingnessError, CheckpointError,
                 FileNotFoundError, ValueError)


class _Parser(argparse.ArgumentParser):
    """argparse flags usage problems with exit code 2 by default; the
    contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_manifest(out: Path, command: str, args, resolved: dict,
                    artifacts: dict[str, str], started: str) -> None:
    payload = {
        "command": command,
        "config_path": str(args.config) if args.config else None,
        "preset": args.preset,
        "resolved_config": resolved,
        "out_dir": str(out),
        "started_at": started,
        "finished_at": _utc_now(),
        "artifacts": artifacts,
    }
    tmp = out / "run_manifest.json.tmp"
    with open(tmp, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, out / "run_manifest.json")


def _resolve(args) -> dict:
    overrides: dict = {}
    if args.seed is not None:
        overrides = {"dataset": {"seed": args.seed}, "train": {"seed": args.seed}}
    return cfgmod.resolve_config(preset=args.preset, config_path=args.config,
                                 overrides=overrides)


def _out_dir(args) -> Path:
    if args.out is None:
        raise ConfigError("--out DIR is required for this subcommand")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pad_sample(s: ModalitySample) -> ModalitySample:
    t = max(s.x_l.shape[0], s.x_a.shape[0], s.x_v.shape[0])

    def pad(x):
        if x.shape[0] == t:
            return x
        return np.vstack([x, np.zeros((t - x.shape[0], x.shape[1]), dtype=x.dtype)])

    return ModalitySample(id=s.id, label=s.label,
                          x_l=pad(s.x_l), x_a=pad(s.x_a), x_v=pad(s.x_v))


def _load_data(path: str, pad_to_max: bool) -> Dataset:
    ds = load_dataset(path)
    if not pad_to_max:
        return ds
    return Dataset(
        config=ds.config,
        train=[_pad_sample(s) for s in ds.train],
        valid=[_pad_sample(s) for s in ds.valid],
        test=[_pad_sample(s) for s in ds.test],
    )


# ---------------------------------------------------------------------------
# subcommands


def _cmd_generate_data(args) -> int:
    started = _utc_now()
    resolved = _resolve(args)
    out = _out_dir(args)
    ds_cfg = cfgmod.dataset_config(resolved)
    dataset = generate_synthetic(ds_cfg)
    data_path = out / "dataset.jsonl"
    save_dataset(dataset, data_path)
    cfgmod.dump_config(resolved, out / "resolved_config.yaml")
    _write_manifest(out, "generate-data", args, resolved,
                    {"dataset": str(data_path)}, started)
    n = sum(len(dataset.split(s)) for s in ("train", "valid", "test"))
    print(f"wrote {n} samples to {data_path}")
    return 0


def _cmd_train_teacher(args) -> int:
    started = _utc_now()
    resolved = _resolve(args)
    out = _out_dir(args)
    tcfg = cfgmod.train_config(resolved)
    dataset = _load_data(args.data, args.pad_to_max)
    resume = load_checkpoint(args.resume, expect_role="teacher") if args.resume else None
    metrics_path = out / "teacher_metrics.csv"
    ckpt = train_teacher(dataset, tcfg, metrics_path=metrics_path, resume=resume)
    ckpt_path = out / "teacher.ckpt"
    save_checkpoint(ckpt, ckpt_path)
    cfgmod.dump_config(resolved, out / "resolved_config.yaml")
    _write_manifest(out, "train-teacher", args, resolved,
                    {"checkpoint": str(ckpt_path), "metrics": str(metrics_path)},
                    started)
    print(f"teacher: {ckpt.epoch} epochs, best valid acc {ckpt.best_metric:.4f} "
          f"at epoch {ckpt.best_epoch}; saved {ckpt_path}")
    return 0


def _cmd_train_student(args) -> int:
    started = _utc_now()
    resolved = _resolve(args)
    out = _out_dir(args)
    tcfg = cfgmod.train_config(resolved)
    dataset = _load_data(args.data, args.pad_to_max)
    teacher = load_checkpoint(args.teacher, expect_role="teacher")
    resume = load_checkpoint(args.resume, expect_role="student") if args.resume else None
    metrics_path = out / "student_metrics.csv"
    ckpt = train_student(dataset, teacher, tcfg, metrics_path=metrics_path,
                         resume=resume)
    ckpt_path = out / "student.ckpt"
    save_checkpoint(ckpt, ckpt_path)
    cfgmod.dump_config(resolved, out / "resolved_config.yaml")
    _write_manifest(out, "train-student", args, resolved,
                    {"checkpoint": str(ckpt_path), "metrics": str(metrics_path)},
                    started)
    print(f"student: {ckpt.epoch} epochs, best valid wF1 {ckpt.best_metric:.4f} "
          f"at epoch {ckpt.best_epoch}; saved {ckpt_path}")
    return 0


def _cmd_evaluate(args) -> int:
    started = _utc_now()
    resolved = _resolve(args)
    out = _out_dir(args)
    ev = cfgmod.eval_settings(resolved)
    dataset = _load_data(args.data, args.pad_to_max)
    ckpt = load_checkpoint(args.ckpt)
    spec = MissingnessSpec(p_l=args.p, p_a=args.p, p_v=args.p,
                           available=frozenset(args.available), mode="fixed")
    seed = args.seed if args.seed is not None else ev["seeds"][0]
    row = evaluate_condition(ckpt, dataset.split(ev["split"]), spec, seed)
    eval_path = out / "eval.csv"
    with open(eval_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(report_header(len(row.f1_per_class)))
        w.writerow([row.condition, f"{row.p:.9g}", row.available,
                    f"{row.acc:.9g}", f"{row.wf1:.9g}"]
                   + [f"{v:.9g}" for v in row.f1_per_class]
                   + [row.n, row.seed])
    cfgmod.dump_config(resolved, out / "resolved_config.yaml")
    _write_manifest(out, "evaluate", args, resolved,
                    {"eval": str(eval_path)}, started)
    print(f"{row.condition}: acc {row.acc:.4f}, wF1 {row.wf1:.4f} "
          f"(n={row.n}, seed={row.seed})")
    return 0


def _cmd_sweep(args) -> int:
    started = _utc_now()
    resolved = _resolve(args)
    out = _out_dir(args)
    ev = cfgmod.eval_settings(resolved)
    dataset = _load_data(args.data, args.pad_to_max)
    ckpt = load_checkpoint(args.ckpt)
    report = robustness_sweep(ckpt, dataset, seeds=ev["seeds"],
                              split=ev["split"], jobs=args.jobs)
    report_path = out / "report.csv"
    write_report(report, report_path)
    cfgmod.dump_config(resolved, out / "resolved_config.yaml")
    _write_manifest(out, "sweep", args, resolved,
                    {"report": str(report_path),
                     "curve": str(out / "report_curve.csv")},
                    started)
    print(format_report_table(report))
    print(f"report written to {report_path}")
    return 0


def _cmd_report(args) -> int:
    report = read_report(args.report)
    print(format_report_table(report))
    return 0


def _cmd_check_losses(args) -> int:
    results = run_loss_oracles()
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} loss checks passed")
    if failed:
        raise RuntimeError(f"{len(failed)} loss check(s) failed")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None,
                        help="YAML run config with sections dataset/net/train/mrm/eval")
    common.add_argument("--preset", choices=sorted(cfgmod.PRESETS), default=None,
                        help="named hyperparameter preset applied under the config file")
    common.add_argument("--seed", type=int, default=None,
                        help="override dataset.seed and train.seed")
    common.add_argument("--out", metavar="DIR", default=None,
                        help="output directory; all artifacts land here")

    data_flags = _Parser(add_help=False)
    data_flags.add_argument("--data", metavar="PATH", required=True,
                            help="dataset JSON-lines file")
    data_flags.add_argument("--pad-to-max", action="store_true",
                            help="zero-pad modalities to a common length per sample")

    parser = _Parser(
        prog="corrkd",
        description="Correlation-decoupled distillation for multimodal "
                    "emotion recognition under missing modalities.",
    )
    sub = parser.add_subparsers(dest="cmd", parser_class=_Parser)

    p = sub.add_parser("generate-data", parents=[common],
                       help="write a synthetic three-modality dataset")
    p.set_defaults(func=_cmd_generate_data)

    p = sub.add_parser("train-teacher", parents=[common, data_flags],
                       help="train the teacher on complete data")
    p.add_argument("--resume", metavar="PATH", default=None,
                   help="continue from a teacher checkpoint")
    p.set_defaults(func=_cmd_train_teacher)

    p = sub.add_parser("train-student", parents=[common, data_flags],
                       help="distill a student on corrupted data")
    p.add_argument("--teacher", metavar="PATH", required=True,
                   help="frozen teacher checkpoint")
    p.add_argument("--resume", metavar="PATH", default=None,
                   help="continue from a student checkpoint")
    p.set_defaults(func=_cmd_train_student)

    p = sub.add_parser("evaluate", parents=[common, data_flags],
                       help="score one corruption condition")
    p.add_argument("--ckpt", metavar="PATH", required=True)
    p.add_argument("--available", default="lav",
                   help="modalities kept at test time, e.g. la (default lav)")
    p.add_argument("--p", type=float, default=0.0,
                   help="frame drop ratio applied to every kept modality")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", parents=[common, data_flags],
                       help="run the 17-condition robustness grid")
    p.add_argument("--ckpt", metavar="PATH", required=True)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker threads for scoring conditions")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", parents=[common],
                       help="pretty-print a sweep report CSV")
    p.add_argument("--report", metavar="PATH", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("check-losses", parents=[common],
                       help="run every loss self-check and print a table")
    p.set_defaults(func=_cmd_check_losses)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.cmd is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except _USAGE_ERRORS as e:
        print(f"corrkd: error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"corrkd: runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

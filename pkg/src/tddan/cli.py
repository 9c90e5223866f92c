"""Command-line entry point: ``tddan {generate,train,evaluate,compare-targets,grad-check}``."""

from __future__ import annotations

import argparse
import sys

from .errors import (
    EmptySpeaker, InvalidArgument, InvalidConfiguration, NumericalFailure, UnsupportedCondition,
    WavParseError,
)

EXPECTED_ERRORS = (InvalidArgument, InvalidConfiguration, NumericalFailure, UnsupportedCondition,
                   WavParseError, EmptySpeaker, FileNotFoundError)


def _summary_path(out_csv):
    stem = out_csv[:-4] if out_csv.endswith(".csv") else out_csv
    return stem + "_summary.csv"


def cmd_generate(args):
    from .harness.config import load_config
    from .harness.dataset import generate_dataset

    cfg = load_config(args.config)
    manifest = generate_dataset(cfg.dataset, args.out)
    splits = {}
    for r in manifest["scenes"]:
        splits[r["split"]] = splits.get(r["split"], 0) + 1
    print(f"wrote {len(manifest['scenes'])} scenes to {args.out} "
          + " ".join(f"{k}={v}" for k, v in sorted(splits.items())))
    return 0


def cmd_train(args):
    from .harness.config import load_config
    from .harness.train import train

    cfg = load_config(args.config)

    def progress(row):
        print(f"epoch {row['epoch']:3d}  train {row['train_loss']:.4f}  "
              f"valid {row['valid_loss']:.4f}  lr {row['lr']:.2e}", flush=True)

    result = train(cfg, args.data, args.out, log_path=args.log, progress=None if args.quiet else progress)
    print(f"{result.steps} steps, best validation loss {result.best_valid:.4f}; checkpoint {args.out}")
    return 0


def cmd_evaluate(args):
    from .harness.evaluate import SUMMARY_FIELDS, evaluate
    from .harness.tables import format_rows
    from .harness.targets import ORACLE_SYSTEMS
    from .harness.train import load_model

    model = None
    if args.ckpt:
        model, _ = load_model(args.ckpt)
    modes = ("oracle", "kmeans") if args.attractor == "both" else (args.attractor,)
    oracle = ORACLE_SYSTEMS if "all" in args.oracle_systems else tuple(args.oracle_systems)
    if model is None and not oracle:
        raise InvalidArgument("nothing to evaluate: give --ckpt and/or --oracle-systems")
    summary_csv = _summary_path(args.out)
    _, summary = evaluate(args.data, args.out, model, modes, args.split, oracle, args.filter_len,
                          args.kmeans_seed, summary_csv=summary_csv)
    sys.stdout.write(format_rows(summary, SUMMARY_FIELDS))
    return 0


def cmd_compare_targets(args):
    from .harness.dataset import load_manifest, load_scene, select
    from .harness.tables import format_rows, write_rows
    from .harness.targets import TARGET_FIELDS, compare_targets

    manifest = load_manifest(args.data)
    records = select(manifest, args.split)[: args.max_scenes]
    rows = compare_targets((load_scene(args.data, r) for r in records), args.filter_len)
    write_rows(args.out, rows, TARGET_FIELDS)
    sys.stdout.write(format_rows(rows, TARGET_FIELDS))
    return 0


def cmd_grad_check(args):
    from .harness.gradsuite import run_suite

    failed = 0
    for r in run_suite(args.seed):
        failed += not r.passed
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:28s} rel.err {r.error:.3e} (tol {r.tolerance:g})")
    print(f"{failed} failure(s)")
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="tddan", description="TD-DAN separation laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a dataset of reverberant mixtures")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the configured model")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", help="per-epoch CSV (default: <out stem>_log.csv)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint and/or oracle-mask systems")
    p.add_argument("--ckpt")
    p.add_argument("--data", required=True)
    p.add_argument("--attractor", choices=("oracle", "kmeans", "both"), default="oracle")
    p.add_argument("--out", required=True, help="per-scene metrics CSV")
    p.add_argument("--split", default="test", choices=("train", "valid", "test", "all"))
    p.add_argument("--oracle-systems", nargs="*", default=[],
                   help="any of mixture irm irm-derevb wfm wfm-derevb, or 'all'")
    p.add_argument("--filter-len", type=int, default=512)
    p.add_argument("--kmeans-seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare-targets", help="score candidate learning targets against clean sources")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="all", choices=("train", "valid", "test", "all"))
    p.add_argument("--max-scenes", type=int, default=20)
    p.add_argument("--filter-len", type=int, default=512)
    p.set_defaults(func=cmd_compare_targets)

    p = sub.add_parser("grad-check", help="run the finite-difference gradient suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_grad_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EXPECTED_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

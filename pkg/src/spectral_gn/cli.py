"""Command-line entry point: generate | train | eval | perturb | curves."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .datasets import GENERATORS, PERTURBATIONS, generate, load_manifest, load_samples, perturb, save_samples
from .datasets.samples import spawn_seeds
from .exceptions import SpectralGNError
from .harness import ExperimentConfig, evaluate, evaluate_split, merge_curves, train


def _cmd_generate(args):
    params = json.loads(args.params) if args.params else {}
    samples = generate(args.family, args.n, args.count, args.seed, args.task, args.holes, **params)
    manifest = {"generator": args.family, "params": dict(params, n=args.n, holes=args.holes, task=args.task),
                "seed": args.seed}
    count = save_samples(args.out, samples, manifest)
    print(f"wrote {count} samples to {args.out}")


def _cmd_perturb(args):
    amount = args.p if args.p is not None else args.amount
    if amount is None:
        raise SystemExit("perturb: one of --p / --amount is required")
    samples = load_samples(args.data)
    seeds = spawn_seeds(args.seed, len(samples))
    out = [perturb(s, args.kind, amount, np.random.default_rng(c)) for s, c in zip(samples, seeds)]
    manifest = {"source": os.path.basename(args.data), "source_manifest": load_manifest(args.data),
                "perturbation": {"kind": args.kind, "amount": amount}, "seed": args.seed}
    count = save_samples(args.out, out, manifest)
    print(f"wrote {count} samples to {args.out}")


def _cmd_train(args):
    cfg = ExperimentConfig.load(args.config)
    if args.out:
        cfg.out_dir = os.path.abspath(args.out)
    record = train(cfg, verbose=not args.quiet)
    final = record.rows[-1][0] if record.rows else 0
    print(f"finished {cfg.name} at iteration {final}; outputs in {cfg.output_dir}")


def _cmd_eval(args):
    if args.config:
        metrics = evaluate_split(ExperimentConfig.load(args.config), args.checkpoint, args.split)
    elif args.data:
        metrics = evaluate(args.checkpoint, args.data, edge_dropout=args.edge_dropout, seed=args.seed)
    else:
        raise SystemExit("eval: give --data or --config")
    print(json.dumps(metrics, sort_keys=True))


def _cmd_curves(args):
    runs = {}
    for item in args.runs:
        name, sep, path = item.partition("=")
        if not sep:
            raise SystemExit(f"curves: expected NAME=RUN_CSV, got {item!r}")
        if os.path.isdir(path):
            path = os.path.join(path, "run.csv")
        runs[name] = path
    text = merge_curves(runs)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    print(f"merged {len(runs)} runs into {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectral-gn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a JSON-lines dataset and manifest")
    g.add_argument("--family", required=True, choices=sorted(GENERATORS))
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--task", default="shortest-path", choices=["shortest-path", "none"])
    g.add_argument("--holes", type=int, default=0, help="shortest-path holes cut before labelling")
    g.add_argument("--params", help="extra generator keyword arguments as JSON")
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generate)

    p = sub.add_parser("perturb", help="apply a perturbation to every sample of a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--kind", required=True, choices=PERTURBATIONS)
    p.add_argument("--p", type=float, help="dropout probability / edge fraction")
    p.add_argument("--amount", type=float, help="generic amount (number of paths for path dropout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_perturb)

    t = sub.add_parser("train", help="train from an experiment config")
    t.add_argument("--config", required=True)
    t.add_argument("--out", help="override the configured output directory")
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("eval", help="score a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", help="labelled JSON-lines dataset")
    e.add_argument("--config", help="experiment config; scores one of its splits")
    e.add_argument("--split", default="test", choices=["train", "val", "test"])
    e.add_argument("--edge-dropout", type=float, default=0.0)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=_cmd_eval)

    c = sub.add_parser("curves", help="merge run records into one comparison CSV")
    c.add_argument("runs", nargs="+", metavar="NAME=RUN", help="variant name and run.csv (or run dir)")
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_curves)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (SpectralGNError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

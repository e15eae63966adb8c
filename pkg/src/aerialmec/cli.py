"""Command-line entry point: ``aerialmec {run,sweep,evaluate,validate}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import VARIANTS, ConfigError, load_config
from .harness import SWEEP_AXES, evaluate_checkpoint, run, sweep


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML experiment file (defaults to full scale)")
    p.add_argument("--profile", choices=("full", "desk"), help="base profile, overrides the file")
    p.add_argument("--seeds", type=int, nargs="+", help="seed list")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--out", help="output directory")
    p.add_argument("--steps", type=int, help="total environment steps per seed")
    p.add_argument("--workers", type=int, help="parallel seed workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aerialmec", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)
    _common(sub.add_parser("run", help="train every seed and summarise"))
    sw = sub.add_parser("sweep", help="one run per value of a parameter axis")
    _common(sw)
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sw.add_argument("--values", required=True, type=float, nargs="+")
    ev = sub.add_parser("evaluate", help="roll one greedy episode from a checkpoint")
    _common(ev)
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--trace", default="trace.jsonl", help="output JSONL path")
    va = sub.add_parser("validate", help="run the invariant self-checks")
    va.add_argument("--seed", type=int, default=0)
    return parser


def _load(args):
    overrides: dict = {}
    if args.profile:
        overrides["profile"] = args.profile
    exp = {k: v for k, v in (("seeds", args.seeds), ("variant", args.variant), ("output_dir", args.out),
                              ("total_steps", args.steps), ("workers", args.workers)) if v is not None}
    if exp:
        overrides["experiment"] = exp
    return load_config(args.config, overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "validate":
            from .validation import run_checks
            results = run_checks(args.seed)
            for r in results:
                print(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.detail}")
            return 0 if all(r.ok for r in results) else 1
        env_cfg, train_cfg, spec = _load(args)
        if args.verb == "run":
            summary = run(env_cfg, train_cfg, spec)
            for m in ("weighted_energy", "mean_mu_reward", "mean_uav_reward", "jain"):
                print(f"{m}: {summary[m]['mean']:.6g} +/- {summary[m]['std']:.3g}")
        elif args.verb == "sweep":
            table = sweep(env_cfg, train_cfg, spec, args.axis, args.values)
            print(json.dumps(table, indent=2))
        elif args.verb == "evaluate":
            if spec.total_steps is not None:
                train_cfg = dataclasses.replace(train_cfg, total_steps=spec.total_steps)
            Path(args.trace).parent.mkdir(parents=True, exist_ok=True)
            rollout = evaluate_checkpoint(env_cfg, train_cfg, args.checkpoint, spec.seeds[0],
                                          args.trace, spec.variant)
            energy = sum(r.objective for r in rollout.reports) / len(rollout.reports)
            print(f"wrote {len(rollout.reports)} slots to {args.trace}; weighted energy {energy:.6g}")
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

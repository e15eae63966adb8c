"""Experiment orchestration: runs, sweeps, summaries and evaluation traces.

Directory layout of one run::

    <out>/config.json           resolved configuration + code version
    <out>/summary.csv|json      mean and std over seeds of final-10% metrics
    <out>/seed_<s>/metrics.csv  one row per episode (deterministic)
    <out>/seed_<s>/timing.csv   wall-clock seconds per episode
    <out>/seed_<s>/checkpoint.txt
    <out>/seed_<s>/trace.jsonl  greedy evaluation episode, one record per slot
"""

from __future__ import annotations

import csv
import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, EnvConfig, ExperimentSpec, TrainConfig, dump_resolved, from_dict
from .mappo import METRIC_COLUMNS, build_groups, evaluate, load_checkpoint, train
from .mappo.trainer import variant_parts

SUMMARY_METRICS = tuple(c for c in METRIC_COLUMNS if c not in ("episode", "steps"))
SWEEP_AXES = ("K", "M", "B", "weight", "deviation_rate", "f_max_loc", "f_max_edge", "L_max")


def _fmt(v: Any) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[dict[str, Any]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def read_metrics(path: str | Path) -> list[dict[str, float]]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def write_trace(path: Path, rollout) -> None:
    with open(path, "w") as fh:
        for rep in rollout.reports:
            fh.write(rep.to_json() + "\n")


def final_window(rows: Sequence[dict[str, float]]) -> Sequence[dict[str, float]]:
    """Last 10% of episodes (at least one)."""
    return rows[-max(1, len(rows) // 10):]


def summarize(per_seed: dict[int, Sequence[dict[str, float]]]) -> dict[str, dict[str, float]]:
    """``{metric: {mean, std, n}}``; std is the sample std over seeds (0 for one seed)."""
    out = {}
    for m in SUMMARY_METRICS:
        vals = np.array([np.mean([r[m] for r in final_window(rows)]) for rows in per_seed.values()])
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        out[m] = {"mean": float(np.mean(vals)), "std": std, "n": int(len(vals))}
    return out


def _run_seed(env_cfg: EnvConfig, train_cfg: TrainConfig, variant: str, seed: int,
              out: Path) -> list[dict[str, float]]:
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "checkpoint.txt"
    res = train(env_cfg, train_cfg, seed=seed, variant=variant,
                checkpoint_path=ckpt if variant != "random" else None)
    write_csv(out / "metrics.csv", METRIC_COLUMNS, res.metrics)
    write_csv(out / "timing.csv", ("episode", "seconds"),
              [{"episode": r["episode"], "seconds": t} for r, t in zip(res.metrics, res.wall_clock)])
    rollout = evaluate(env_cfg, res.groups, seed, train_cfg.episode_length)
    write_trace(out / "trace.jsonl", rollout)
    return res.metrics


def _run_seed_job(args):
    env_d, train_d, variant, seed, out = args
    env_cfg, train_cfg = from_dict({"env": env_d, "train": train_d})
    return seed, _run_seed(env_cfg, train_cfg, variant, seed, Path(out))


def run(env_cfg: EnvConfig, train_cfg: TrainConfig, spec: ExperimentSpec) -> dict[str, Any]:
    """Train every seed of ``spec`` and write the artifacts; returns the summary."""
    env_cfg.validate()
    train_cfg.validate()
    spec.validate()
    if spec.total_steps is not None:
        train_cfg = dataclasses.replace(train_cfg, total_steps=spec.total_steps)
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_resolved(out / "config.json", env_cfg, train_cfg, spec)
    _stamp_version(out / "config.json")

    per_seed: dict[int, list[dict[str, float]]] = {}
    if spec.workers > 1 and len(spec.seeds) > 1:
        env_d, train_d = dataclasses.asdict(env_cfg), dataclasses.asdict(train_cfg)
        jobs = [(env_d, train_d, spec.variant, s, str(out / f"seed_{s}")) for s in spec.seeds]
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for seed, rows in pool.map(_run_seed_job, jobs):
                per_seed[seed] = rows
    else:
        for s in spec.seeds:
            per_seed[s] = _run_seed(env_cfg, train_cfg, spec.variant, s, out / f"seed_{s}")

    summary = summarize(per_seed)
    _write_summary(out, summary, spec.variant, spec.seeds)
    return summary


def _stamp_version(path: Path) -> None:
    data = json.loads(path.read_text())
    data["version"] = __version__
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_summary(out: Path, summary: dict, variant: str, seeds: Sequence[int]) -> None:
    (out / "summary.json").write_text(json.dumps(
        {"variant": variant, "seeds": list(seeds), "metrics": summary}, indent=2, sort_keys=True) + "\n")
    rows = [{"metric": m, "mean": s["mean"], "std": s["std"], "n": s["n"]} for m, s in summary.items()]
    write_csv(out / "summary.csv", ("metric", "mean", "std", "n"), rows)


def apply_axis(env_cfg: EnvConfig, axis: str, value: float) -> EnvConfig:
    """Copy of ``env_cfg`` with one sweep axis set to ``value``."""
    rep = dataclasses.replace
    if axis == "K":
        return rep(env_cfg, num_mus=int(value))
    if axis == "M":
        return rep(env_cfg, num_uavs=int(value))
    if axis == "B":
        return rep(env_cfg, channel=rep(env_cfg.channel, bandwidth=float(value)))
    if axis == "weight":
        return rep(env_cfg, weight=float(value))
    if axis == "deviation_rate":
        return rep(env_cfg, deviation=rep(env_cfg.deviation, freq_rate=float(value),
                                          loc_rate=float(value)))
    if axis == "f_max_loc":
        return rep(env_cfg, f_max_loc=float(value))
    if axis == "f_max_edge":
        return rep(env_cfg, f_max_edge=float(value))
    if axis == "L_max":
        return rep(env_cfg, task_bits_max=float(value))
    raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")


SWEEP_COLUMNS = ("value", "weighted_energy", "weighted_energy_std", "mu_weighted_energy",
                 "mu_weighted_energy_std", "mu_energy", "uav_energy", "jain",
                 "mean_mu_reward", "mean_uav_reward")


def sweep(env_cfg: EnvConfig, train_cfg: TrainConfig, spec: ExperimentSpec, axis: str,
          values: Sequence[float]) -> list[dict[str, float]]:
    """One :func:`run` per value into ``<out>/<axis>=<value>``; writes ``sweep.csv``."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    out = Path(spec.output_dir)
    table = []
    for v in values:
        cfg = apply_axis(env_cfg, axis, v)
        sub = dataclasses.replace(spec, output_dir=str(out / f"{axis}={v:g}"))
        s = run(cfg, train_cfg, sub)
        table.append({
            "value": float(v),
            "weighted_energy": s["weighted_energy"]["mean"],
            "weighted_energy_std": s["weighted_energy"]["std"],
            "mu_weighted_energy": s["mu_weighted_energy"]["mean"],
            "mu_weighted_energy_std": s["mu_weighted_energy"]["std"],
            "mu_energy": s["mu_energy"]["mean"],
            "uav_energy": s["uav_energy"]["mean"],
            "jain": s["jain"]["mean"],
            "mean_mu_reward": s["mean_mu_reward"]["mean"],
            "mean_uav_reward": s["mean_uav_reward"]["mean"],
        })
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, table)
    return table


def evaluate_checkpoint(env_cfg: EnvConfig, train_cfg: TrainConfig, checkpoint: str | Path,
                        seed: int, out_path: str | Path, variant: str = "ab-mappo"):
    """Load actor weights, roll one greedy episode, write its trace."""
    variant_parts(variant)
    groups = build_groups(env_cfg, train_cfg, variant, seed)
    load_checkpoint(checkpoint, groups)
    rollout = evaluate(env_cfg, groups, seed, train_cfg.episode_length)
    write_trace(Path(out_path), rollout)
    return rollout

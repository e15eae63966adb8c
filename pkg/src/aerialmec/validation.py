"""Fast invariant self-checks behind ``aerialmec validate``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import physics, tasking
from .config import EnvConfig, desk_profile
from .env import (UavMecEnv, mu_action_dim, remap_mu_action, remap_uav_action, uav_action_dim)
from .mappo import compute_gae


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def _hover() -> tuple[bool, str]:
    e = tasking.propulsion_energy(np.array([0.0]), EnvConfig().power, 1.0)[0]
    return abs(e - 118.11) < 1e-9, f"hover energy {e:.12f} J"


def _los_anchor() -> tuple[bool, str]:
    p = physics.los_probability(15.0, 15.0, 0.5)
    return abs(p - 0.0625) < 1e-12, f"P_LoS(a) = {p!r}"


def _latency_gap(rng) -> tuple[bool, str]:
    y = rng.uniform(1e6, 1e9, 1000)
    f = rng.uniform(1e8, 1e10, 1000)
    dev = f * rng.uniform(-0.5, 0.5, 1000)
    lhs = y / f + tasking.latency_gap(y, f, dev)
    err = float(np.max(np.abs(lhs - y / (f + dev)) / (y / (f + dev))))
    return err < 1e-12, f"max rel err {err:.2e}"


def _gae(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(20):
        r, v = rng.standard_normal(10), rng.standard_normal(10)
        adv, _ = compute_gae(r, v, 0.0, 0.9, 0.8)
        delta = r + 0.9 * np.append(v[1:], 0.0) - v
        brute = np.array([sum((0.9 * 0.8) ** (l - t) * delta[l] for l in range(t, 10))
                          for t in range(10)])
        worst = max(worst, float(np.max(np.abs(adv - brute))))
    return worst < 1e-12, f"max abs err {worst:.2e}"


def _remap(rng) -> tuple[bool, str]:
    env_cfg, _ = desk_profile()
    K, M, B = env_cfg.num_mus, env_cfg.num_uavs, env_cfg.channel.bandwidth
    bad = 0
    for _ in range(500):
        mu = remap_mu_action(rng.uniform(size=(K, mu_action_dim(M))), M)
        uav = remap_uav_action(rng.uniform(size=(M, uav_action_dim(K))), mu, env_cfg)
        alpha = mu.association_matrix(M)
        bad += int(np.any((mu.assoc == 0) & ((mu.rho > 0) | mu.relay)))
        bad += int(uav.bandwidth.sum() > B * (1 + 1e-12) or np.any(uav.bandwidth[alpha == 0] != 0))
        compute = alpha * (1 - mu.relay.astype(float))[:, None]
        bad += int(np.any(uav.freq[compute == 0] != 0))
        bad += int(np.any(uav.freq.sum(axis=0) > env_cfg.f_max_edge * (1 + 1e-12)))
        bad += int(np.any(np.linalg.norm(uav.accel, axis=1) > env_cfg.a_max * (1 + 1e-12)))
    return bad == 0, f"{bad} violations"


def _kinematics(rng) -> tuple[bool, str]:
    env_cfg, _ = desk_profile()
    env = UavMecEnv(env_cfg, seed=int(rng.integers(1 << 31)))
    K, M = env_cfg.num_mus, env_cfg.num_uavs
    worst_v, outside = 0.0, 0
    for _ in range(300):
        mu = remap_mu_action(rng.uniform(size=(K, mu_action_dim(M))), M)
        env.set_mu_actions(mu)
        uav = remap_uav_action(rng.uniform(size=(M, uav_action_dim(K))), mu, env_cfg)
        rep = env.step(mu, uav)
        worst_v = max(worst_v, float(np.max(np.linalg.norm(env.state.uav_velocity, axis=1))))
        q = env.state.uav_position[:, :2]
        outside += int(np.any((q < 0) | (q > env_cfg.width)))
        if rep.done:
            env.reset(int(rng.integers(1 << 31)))
    return worst_v <= env_cfg.v_max + 1e-9 and outside == 0, f"max |v| {worst_v:.6f}, {outside} exits"


def _gradients(rng) -> tuple[bool, str]:
    from .mappo import AttentionCritic, critic_loss
    from .neuro import grad_check
    critic = AttentionCritic(4, 5, "mu", hidden=8, feature=8, heads=4, rng=rng)
    mu_obs, uav_obs = rng.uniform(size=(3, 3, 4)), rng.uniform(size=(3, 2, 5))
    targets = rng.standard_normal((3, 3))
    _, grads = critic_loss(critic, mu_obs, uav_obs, targets)
    rep = grad_check(lambda: critic_loss(critic, mu_obs, uav_obs, targets)[0], critic.params, grads,
                     tol=1e-4, max_entries=8, seed=0)
    return rep.ok, f"critic max rel err {rep.max_rel_error:.2e}"


CHECKS: dict[str, Callable[[np.random.Generator], tuple[bool, str]]] = {
    "hover-energy": lambda rng: _hover(),
    "los-anchor": lambda rng: _los_anchor(),
    "latency-gap": _latency_gap,
    "gae-oracle": _gae,
    "remap-constraints": _remap,
    "kinematics": _kinematics,
    "critic-gradient": _gradients,
}


def run_checks(seed: int = 0) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn(np.random.default_rng([seed, len(out)]))
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out

"""Centralised-training / decentralised-execution loop for the two agent groups.

MUs and UAVs each form one group with a shared actor and a shared critic.
Every episode is seeded from ``(seed, episode)`` alone, so a run resumed
from a checkpoint continues exactly as an uninterrupted one.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..config import EnvConfig, TrainConfig
from ..env import (StepReport, UavMecEnv, mu_action_dim, mu_obs_dim, remap_mu_action,
                   remap_uav_action, uav_action_dim, uav_obs_dim)
from ..neuro import Adam, clip_grad_norm, load_tensors, save_tensors
from .networks import Actor, AttentionCritic, FlatCritic
from .ppo import ValueNorm, actor_loss, compute_gae, critic_loss, normalize_advantages

GROUPS = ("mu", "uav")


@dataclass
class AgentGroup:
    name: str
    actor: Actor
    critic: AttentionCritic | FlatCritic
    actor_opt: Adam
    critic_opt: Adam
    gamma: float
    lam: float
    value_norm: ValueNorm | None

    def values(self, mu_state: np.ndarray, uav_state: np.ndarray) -> np.ndarray:
        v = self.critic(mu_state, uav_state)
        return self.value_norm.denormalize(v) if self.value_norm is not None else v


def variant_parts(variant: str) -> tuple[str, bool]:
    """(policy head, attention critic?) of an algorithm variant."""
    return {"ab-mappo": ("beta", True), "b-mappo": ("beta", False),
            "ag-mappo": ("gaussian", True)}[variant]


def build_groups(env_cfg: EnvConfig, train_cfg: TrainConfig, variant: str = "ab-mappo",
                 seed: int = 0) -> dict[str, AgentGroup]:
    kind, attention = variant_parts(variant)
    K, M = env_cfg.num_mus, env_cfg.num_uavs
    d_mu, d_uav = mu_obs_dim(M), uav_obs_dim(K, M)
    dims = {"mu": (d_mu, mu_action_dim(M), train_cfg.gamma_mu),
            "uav": (d_uav, uav_action_dim(K), train_cfg.gamma_uav)}
    root = np.random.SeedSequence([seed, 7919])
    groups = {}
    for name, child in zip(GROUPS, root.spawn(len(GROUPS))):
        rng = np.random.default_rng(child)
        obs_dim, act_dim, gamma = dims[name]
        actor = Actor(obs_dim, act_dim, train_cfg.hidden_size, kind, rng)
        if attention:
            critic = AttentionCritic(d_mu, d_uav, name, train_cfg.hidden_size,
                                     train_cfg.feature_size, train_cfg.attention_heads, rng)
        else:
            critic = FlatCritic(d_mu, d_uav, name, K, M, train_cfg.hidden_size, rng)
        groups[name] = AgentGroup(
            name, actor, critic, Adam(actor.params, train_cfg.actor_lr),
            Adam(critic.params, train_cfg.critic_lr), gamma, train_cfg.gae_lambda,
            ValueNorm() if train_cfg.value_norm else None)
    return groups


@dataclass
class Rollout:
    """One episode of transitions, arrays indexed ``[t, agent, ...]``.

    ``state_*`` hold the critic inputs: the noise-free observations of every
    agent. The MU critic sees UAV observations before MUs act; the UAV
    critic sees them after.
    """

    obs: dict[str, np.ndarray]
    raw_actions: dict[str, np.ndarray]
    log_probs: dict[str, np.ndarray]
    rewards: dict[str, np.ndarray]
    state_mu: np.ndarray
    state_uav_pre: np.ndarray
    state_uav_post: np.ndarray
    dones: np.ndarray
    reports: list[StepReport]
    values: dict[str, np.ndarray] = field(default_factory=dict)
    advantages: dict[str, np.ndarray] = field(default_factory=dict)
    returns: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.dones)

    def critic_state(self, group: str) -> tuple[np.ndarray, np.ndarray]:
        return self.state_mu, (self.state_uav_pre if group == "mu" else self.state_uav_post)


def _random_policy(rng, n, dim):
    x = rng.uniform(0.0, 1.0, size=(n, dim))
    return x, x, np.zeros(n)


def episode_seeds(seed: int, episode: int) -> tuple[np.random.SeedSequence, np.random.Generator]:
    env_ss, act_ss = np.random.SeedSequence([seed, episode]).spawn(2)
    return env_ss, np.random.default_rng(act_ss)


def collect_episode(env: UavMecEnv, groups: dict[str, AgentGroup] | None, rng: np.random.Generator,
                    length: int, env_seed: np.random.SeedSequence | int | None = None,
                    greedy: bool = False) -> Rollout:
    """Roll ``length`` slots; ``groups=None`` plays uniformly random actions.

    The env resets at the start and after every period boundary; resets draw
    seeds from ``env_seed``.
    """
    cfg = env.cfg
    K, M = cfg.num_mus, cfg.num_uavs
    if isinstance(env_seed, np.random.SeedSequence):
        period_seeds = iter(env_seed.spawn(length // cfg.slots_per_period + 2))
    else:
        period_seeds = iter(np.random.SeedSequence(env_seed).spawn(length // cfg.slots_per_period + 2))
    env.reset(next(period_seeds))

    obs = {"mu": [], "uav": []}
    raw = {"mu": [], "uav": []}
    logp = {"mu": [], "uav": []}
    rew = {"mu": [], "uav": []}
    s_mu, s_pre, s_post, dones, reports = [], [], [], [], []

    def act(group, o, n, dim):
        if groups is None:
            return _random_policy(rng, n, dim)
        actor = groups[group].actor
        if greedy:
            a = actor.greedy(o)
            return a, a, np.zeros(n)
        return actor.sample(o, rng)

    for _ in range(length):
        o_mu = env.observe_mu()
        s_mu.append(env.observe_mu(noisy=False))
        s_pre.append(env.observe_uav(noisy=False, pre_decision=True))
        r_mu, a_mu, lp_mu = act("mu", o_mu, K, mu_action_dim(M))
        mu_act = remap_mu_action(a_mu, M)
        env.set_mu_actions(mu_act)

        o_uav = env.observe_uav()
        s_post.append(env.observe_uav(noisy=False))
        r_uav, a_uav, lp_uav = act("uav", o_uav, M, uav_action_dim(K))
        uav_act = remap_uav_action(a_uav, mu_act, cfg)
        report = env.step(mu_act, uav_act)

        obs["mu"].append(o_mu)
        obs["uav"].append(o_uav)
        raw["mu"].append(r_mu)
        raw["uav"].append(r_uav)
        logp["mu"].append(lp_mu)
        logp["uav"].append(lp_uav)
        rew["mu"].append(report.mu_reward)
        rew["uav"].append(report.uav_reward)
        dones.append(report.done)
        reports.append(report)
        if report.done:
            env.reset(next(period_seeds))
    dones[-1] = True

    def stack(d):
        return {k: np.asarray(v, dtype=float) for k, v in d.items()}

    return Rollout(stack(obs), stack(raw), stack(logp), stack(rew), np.asarray(s_mu),
                   np.asarray(s_pre), np.asarray(s_post), np.asarray(dones), reports)


def prepare(groups: dict[str, AgentGroup], rollout: Rollout) -> None:
    """Fill values, GAE advantages and returns; values use the current critics."""
    for name, g in groups.items():
        v = g.values(*rollout.critic_state(name))
        adv, ret = compute_gae(rollout.rewards[name], v, 0.0, g.gamma, g.lam, rollout.dones)
        rollout.values[name], rollout.advantages[name], rollout.returns[name] = v, adv, ret


def update(groups: dict[str, AgentGroup], rollout: Rollout, cfg: TrainConfig) -> dict[str, float]:
    """PPO epochs over the whole episode (one minibatch per epoch by default)."""
    if not rollout.values:
        prepare(groups, rollout)
    stats: dict[str, float] = {}
    for name, g in groups.items():
        obs = rollout.obs[name].reshape(-1, rollout.obs[name].shape[-1])
        raw = rollout.raw_actions[name].reshape(-1, rollout.raw_actions[name].shape[-1])
        old = rollout.log_probs[name].reshape(-1)
        adv = normalize_advantages(rollout.advantages[name]).reshape(-1)
        ret = rollout.returns[name]
        if g.value_norm is not None:
            g.value_norm.update(ret)
            targets = g.value_norm.normalize(ret)
        else:
            targets = ret
        mu_state, uav_state = rollout.critic_state(name)
        T = len(rollout)
        batches = np.array_split(np.arange(T), cfg.minibatches)
        n_agents = rollout.rewards[name].shape[1]
        for _ in range(cfg.ppo_epochs):
            for b in batches:
                flat = (b[:, None] * n_agents + np.arange(n_agents)[None, :]).reshape(-1)
                a_loss, a_grads, info = actor_loss(g.actor, obs[flat], raw[flat], old[flat], adv[flat],
                                                   cfg.clip_eps, cfg.entropy_coef)
                clip_grad_norm(a_grads, cfg.max_grad_norm)
                g.actor_opt.step(g.actor.params, a_grads)
                c_loss, c_grads = critic_loss(g.critic, mu_state[b], uav_state[b], targets[b])
                clip_grad_norm(c_grads, cfg.max_grad_norm)
                g.critic_opt.step(g.critic.params, c_grads)
        stats[f"{name}_actor_loss"] = a_loss
        stats[f"{name}_critic_loss"] = c_loss
        stats[f"{name}_entropy"] = info["entropy"]
    return stats


METRIC_COLUMNS = (
    "episode", "steps", "mean_mu_reward", "mean_uav_reward", "weighted_energy",
    "mu_weighted_energy", "mu_energy", "uav_energy", "jain", "latency_penalty",
    "boundary_penalty", "collision_penalty", "distance_penalty", "offload_share",
)


def episode_metrics(episode: int, steps: int, rollout: Rollout) -> dict[str, float]:
    reps = rollout.reports
    return {
        "episode": episode,
        "steps": steps,
        "mean_mu_reward": float(np.mean(rollout.rewards["mu"])),
        "mean_uav_reward": float(np.mean(rollout.rewards["uav"])),
        "weighted_energy": float(np.mean([r.objective for r in reps])),
        "mu_weighted_energy": float(np.mean([r.mu_weighted_energy for r in reps])),
        "mu_energy": float(np.mean([r.mu_energy.mean() for r in reps])),
        "uav_energy": float(np.mean([r.uav_energy.mean() for r in reps])),
        "jain": float(np.mean([r.jain for r in reps])),
        "latency_penalty": float(np.mean([r.latency_penalty.sum() for r in reps])),
        "boundary_penalty": float(np.mean([r.boundary_penalty.sum() for r in reps])),
        "collision_penalty": float(np.mean([r.collision_penalty.sum() for r in reps])),
        "distance_penalty": float(np.mean([r.distance_penalty.sum() for r in reps])),
        "offload_share": float(np.mean([r.rho.mean() for r in reps])),
    }


# ------------------------------------------------------------------ checkpoints
def group_tensors(groups: dict[str, AgentGroup], actors_only: bool = False) -> dict[str, np.ndarray]:
    out = {}
    for name, g in groups.items():
        out.update({f"{name}.{k}": v for k, v in g.actor.params.items()})
        if actors_only:
            continue
        out.update({f"{name}.{k}": v for k, v in g.critic.params.items()})
        out.update({f"{name}.opt_actor.{k}": v for k, v in g.actor_opt.state_dict().items()})
        out.update({f"{name}.opt_critic.{k}": v for k, v in g.critic_opt.state_dict().items()})
        if g.value_norm is not None:
            out[f"{name}.value_norm"] = g.value_norm.state()
    return out


def save_checkpoint(path: str | Path, groups: dict[str, AgentGroup], meta: dict) -> None:
    save_tensors(path, group_tensors(groups), meta)


def load_checkpoint(path: str | Path, groups: dict[str, AgentGroup]) -> dict:
    """Copy stored tensors into ``groups`` in place; returns the metadata."""
    tensors, meta = load_tensors(path)
    for name, g in groups.items():
        for params in (g.actor.params, g.critic.params):
            for k, v in params.items():
                key = f"{name}.{k}"
                if key in tensors:
                    np.copyto(v, tensors[key].reshape(v.shape))
        for opt, tag in ((g.actor_opt, "opt_actor"), (g.critic_opt, "opt_critic")):
            prefix = f"{name}.{tag}."
            state = {k[len(prefix):]: v for k, v in tensors.items() if k.startswith(prefix)}
            if state:
                opt.load_state_dict(state)
        if g.value_norm is not None and f"{name}.value_norm" in tensors:
            g.value_norm.load(tensors[f"{name}.value_norm"])
    return meta


# ------------------------------------------------------------------ training
@dataclass
class TrainResult:
    groups: dict[str, AgentGroup] | None
    metrics: list[dict[str, float]]
    wall_clock: list[float]


def train(env_cfg: EnvConfig, train_cfg: TrainConfig, seed: int = 0, variant: str = "ab-mappo",
          checkpoint_path: str | Path | None = None, checkpoint_every: int = 10,
          resume: bool = False, on_episode: Callable[[dict[str, float]], None] | None = None,
          episodes: int | None = None) -> TrainResult:
    """Run ``train_cfg.episodes`` episodes (or ``episodes``) of collection + PPO updates.

    ``variant="random"`` plays uniform actions and never updates anything.
    """
    env = UavMecEnv(env_cfg, seed=seed)
    groups = None if variant == "random" else build_groups(env_cfg, train_cfg, variant, seed)
    n_episodes = episodes if episodes is not None else train_cfg.episodes
    start = 0
    if resume and checkpoint_path is not None and Path(checkpoint_path).exists() and groups:
        meta = load_checkpoint(checkpoint_path, groups)
        start = int(meta["episode"]) + 1
    metrics, clock = [], []
    for ep in range(start, n_episodes):
        t0 = time.perf_counter()
        env_ss, rng = episode_seeds(seed, ep)
        rollout = collect_episode(env, groups, rng, train_cfg.episode_length, env_ss)
        if groups is not None:
            prepare(groups, rollout)
            update(groups, rollout, train_cfg)
        row = episode_metrics(ep, (ep + 1) * train_cfg.episode_length, rollout)
        metrics.append(row)
        clock.append(time.perf_counter() - t0)
        if on_episode is not None:
            on_episode(row)
        if checkpoint_path is not None and groups is not None and (
                (ep + 1) % checkpoint_every == 0 or ep == n_episodes - 1):
            save_checkpoint(checkpoint_path, groups, {"episode": ep, "seed": seed, "variant": variant})
    return TrainResult(groups, metrics, clock)


def evaluate(env_cfg: EnvConfig, groups: dict[str, AgentGroup] | None, seed: int,
             length: int) -> Rollout:
    """One deterministic episode using the policy means."""
    env = UavMecEnv(env_cfg, seed=seed)
    env_ss, rng = episode_seeds(seed, 10 ** 6)
    return collect_episode(env, groups, rng, length, env_ss, greedy=groups is not None)

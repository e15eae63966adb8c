"""GAE, the clipped PPO surrogate and the critic regression loss."""

from __future__ import annotations

import numpy as np

from .networks import Actor


def compute_gae(rewards: np.ndarray, values: np.ndarray, bootstrap_value, gamma: float,
                lam: float, dones: np.ndarray | None = None):
    """Generalised advantage estimates along axis 0.

    ``dones[t]`` marks the last step of an episode: nothing is bootstrapped
    across it. ``bootstrap_value`` is the value after the final step.
    Returns ``(advantages, returns)`` with ``returns = advantages + values``.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    T = rewards.shape[0]
    if values.shape != rewards.shape:
        raise ValueError("rewards and values must have equal shapes")
    if dones is None:
        dones = np.zeros(T, dtype=bool)
    dones = np.asarray(dones, dtype=bool)
    adv = np.zeros_like(rewards)
    gae = np.zeros_like(rewards[0])
    next_value = np.broadcast_to(np.asarray(bootstrap_value, dtype=float), rewards[0].shape)
    for t in range(T - 1, -1, -1):
        mask = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * mask * next_value - values[t]
        gae = delta + gamma * lam * mask * gae
        adv[t] = gae
        next_value = values[t]
    return adv, adv + values


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    # A floor rather than an additive epsilon keeps the result exactly
    # invariant to positive rescaling of the rewards.
    return (adv - adv.mean()) / max(float(adv.std()), 1e-12)


class ValueNorm:
    """Debiased running mean/variance of value targets."""

    def __init__(self, beta: float = 0.99, eps: float = 1e-5):
        self.beta, self.eps = beta, eps
        self.mean_acc = 0.0
        self.sq_acc = 0.0
        self.debias = 0.0

    def update(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        self.mean_acc = self.beta * self.mean_acc + (1 - self.beta) * float(x.mean())
        self.sq_acc = self.beta * self.sq_acc + (1 - self.beta) * float((x ** 2).mean())
        self.debias = self.beta * self.debias + (1 - self.beta)

    def stats(self) -> tuple[float, float]:
        if self.debias == 0.0:
            return 0.0, 1.0
        mean = self.mean_acc / self.debias
        var = max(self.sq_acc / self.debias - mean ** 2, 1e-2)
        return mean, float(np.sqrt(var))

    def normalize(self, x):
        mean, std = self.stats()
        return (np.asarray(x, dtype=float) - mean) / std

    def denormalize(self, x):
        mean, std = self.stats()
        return np.asarray(x, dtype=float) * std + mean

    def state(self) -> np.ndarray:
        return np.array([self.mean_acc, self.sq_acc, self.debias])

    def load(self, arr: np.ndarray) -> None:
        self.mean_acc, self.sq_acc, self.debias = (float(v) for v in arr)


def actor_loss(actor: Actor, obs: np.ndarray, raw_actions: np.ndarray, old_log_probs: np.ndarray,
               advantages: np.ndarray, clip_eps: float = 0.2, entropy_coef: float = 0.01):
    """Negated clipped surrogate minus the entropy bonus, with exact gradients.

    Returns ``(loss, grads, info)``; ``info`` holds the mean ratio,
    the clipped fraction and the mean entropy.
    """
    z, cache = actor.forward(obs)
    head = actor.head
    logp = head.log_prob(z, raw_actions)
    ent = head.entropy(z)
    ratio = np.exp(logp - old_log_probs)
    surr1 = ratio * advantages
    surr2 = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantages
    n = logp.size
    loss = -np.mean(np.minimum(surr1, surr2)) - entropy_coef * np.mean(ent)
    # min() follows the unclipped branch whenever it is the smaller one.
    unclipped = surr1 <= surr2
    dlogp = -np.where(unclipped, advantages * ratio, 0.0) / n
    dent = np.full(logp.shape, -entropy_coef / n)
    dz, grads = head.backward(z, raw_actions, dlogp, dent)
    _, net_grads = actor.net.backward(cache, dz)
    grads = {**net_grads, **grads}
    info = {"ratio": float(ratio.mean()), "clip_frac": float(np.mean(~unclipped)),
            "entropy": float(ent.mean())}
    return float(loss), grads, info


def critic_loss(critic, mu_obs: np.ndarray, uav_obs: np.ndarray, targets: np.ndarray):
    """Mean of ``0.5 * (V - target)^2`` over every (state, agent) pair."""
    v, cache = critic.forward(mu_obs, uav_obs)
    diff = v - targets
    loss = 0.5 * float(np.mean(diff ** 2))
    grads = critic.backward(cache, diff / diff.size)
    return loss, grads

"""Beta and diagonal-Gaussian policy heads.

Both heads map a network output ``z`` to distribution parameters and supply
the gradients of log-density and entropy with respect to ``z``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import digamma, gammaln, polygamma

EPS = 1e-6
LOG_2PI = np.log(2.0 * np.pi)


def softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _check_beta(a, b) -> None:
    if np.any(np.asarray(a) <= 0) or np.any(np.asarray(b) <= 0):
        raise ValueError("Beta parameters must be positive")


def beta_log_prob(a, b, x) -> np.ndarray:
    """Elementwise log-density; ``x`` is clamped to [EPS, 1 - EPS]."""
    _check_beta(a, b)
    x = np.clip(x, EPS, 1.0 - EPS)
    return (gammaln(a + b) - gammaln(a) - gammaln(b)
            + (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x))


def beta_log_prob_grad(a, b, x):
    """Partial derivatives of :func:`beta_log_prob` w.r.t. ``(a, b)``."""
    x = np.clip(x, EPS, 1.0 - EPS)
    dab = digamma(a + b)
    return dab - digamma(a) + np.log(x), dab - digamma(b) + np.log1p(-x)


def beta_entropy(a, b) -> np.ndarray:
    _check_beta(a, b)
    return (gammaln(a) + gammaln(b) - gammaln(a + b) - (a - 1.0) * digamma(a)
            - (b - 1.0) * digamma(b) + (a + b - 2.0) * digamma(a + b))


def beta_entropy_grad(a, b):
    t_ab = polygamma(1, a + b)
    return (-(a - 1.0) * polygamma(1, a) + (a + b - 2.0) * t_ab,
            -(b - 1.0) * polygamma(1, b) + (a + b - 2.0) * t_ab)


def beta_sample(a, b, rng: np.random.Generator) -> np.ndarray:
    _check_beta(a, b)
    return rng.beta(a, b)


def gaussian_log_prob(mean, log_std, x) -> np.ndarray:
    z = (x - mean) * np.exp(-log_std)
    return -0.5 * z ** 2 - log_std - 0.5 * LOG_2PI


def gaussian_entropy(log_std) -> np.ndarray:
    return log_std + 0.5 * (LOG_2PI + 1.0)


def gaussian_sample(mean, log_std, rng: np.random.Generator) -> np.ndarray:
    return mean + np.exp(log_std) * rng.standard_normal(np.shape(mean))


class BetaHead:
    """``alpha = softplus(z_a) + 1``, ``beta = softplus(z_b) + 1``: unimodal Betas.

    The network emits ``2 * dim`` values, alpha logits first.
    """

    bounded = True

    def __init__(self, dim: int):
        self.dim = dim
        self.out_dim = 2 * dim
        self.params: dict[str, np.ndarray] = {}

    def dist(self, z: np.ndarray):
        return softplus(z[..., :self.dim]) + 1.0, softplus(z[..., self.dim:]) + 1.0

    def sample(self, z, rng):
        a, b = self.dist(z)
        x = beta_sample(a, b, rng)
        return x, beta_log_prob(a, b, x).sum(axis=-1)

    def to_env(self, x: np.ndarray) -> np.ndarray:
        return x

    def mode(self, z) -> np.ndarray:
        a, b = self.dist(z)
        return a / (a + b)

    def log_prob(self, z, x) -> np.ndarray:
        a, b = self.dist(z)
        return beta_log_prob(a, b, x).sum(axis=-1)

    def entropy(self, z) -> np.ndarray:
        a, b = self.dist(z)
        return beta_entropy(a, b).sum(axis=-1)

    def backward(self, z, x, dlogp, dent):
        """Gradient w.r.t. ``z`` given per-sample weights on log-prob and entropy."""
        a, b = self.dist(z)
        ga, gb = beta_log_prob_grad(a, b, x)
        ea, eb = beta_entropy_grad(a, b)
        da = dlogp[..., None] * ga + dent[..., None] * ea
        db = dlogp[..., None] * gb + dent[..., None] * eb
        dz = np.concatenate([da * sigmoid(z[..., :self.dim]), db * sigmoid(z[..., self.dim:])], axis=-1)
        return dz, {}


class GaussianHead:
    """State-dependent mean, state-independent learned log-std.

    Samples are unbounded; ``to_env`` squashes them into [0, 1] with a logistic map.
    """

    bounded = False

    def __init__(self, dim: int, init_log_std: float = 0.0, prefix: str = "actor."):
        self.dim = dim
        self.out_dim = dim
        self.key = f"{prefix}log_std"
        self.params = {self.key: np.full(dim, init_log_std)}

    @property
    def log_std(self) -> np.ndarray:
        return self.params[self.key]

    def sample(self, z, rng):
        x = gaussian_sample(z, self.log_std, rng)
        return x, gaussian_log_prob(z, self.log_std, x).sum(axis=-1)

    def to_env(self, x: np.ndarray) -> np.ndarray:
        return sigmoid(x)

    def mode(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float)

    def log_prob(self, z, x) -> np.ndarray:
        return gaussian_log_prob(z, self.log_std, x).sum(axis=-1)

    def entropy(self, z) -> np.ndarray:
        return np.broadcast_to(gaussian_entropy(self.log_std).sum(), np.shape(z)[:-1]).copy()

    def backward(self, z, x, dlogp, dent):
        s = self.log_std
        u = (x - z) * np.exp(-s)
        dz = dlogp[..., None] * u * np.exp(-s)
        d_log_std = (dlogp[..., None] * (u ** 2 - 1.0)).reshape(-1, self.dim).sum(axis=0)
        d_log_std = d_log_std + np.sum(dent)
        return dz, {self.key: d_log_std}

"""Actor and critic networks shared by every agent of one type."""

from __future__ import annotations

import numpy as np

from ..neuro import BetaHead, GaussianHead, Mlp, MultiHeadAttention


class Actor:
    """Observation -> policy distribution. ``kind`` is ``"beta"`` or ``"gaussian"``."""

    def __init__(self, obs_dim: int, act_dim: int, hidden: int = 128, kind: str = "beta",
                 rng: np.random.Generator | None = None):
        if kind == "beta":
            self.head = BetaHead(act_dim)
        elif kind == "gaussian":
            self.head = GaussianHead(act_dim)
        else:
            raise ValueError(f"unknown policy head {kind!r}")
        self.kind = kind
        self.act_dim = act_dim
        self.net = Mlp((obs_dim, hidden, self.head.out_dim), rng, out_gain=0.01, prefix="actor.")
        self.params = {**self.net.params, **self.head.params}

    def forward(self, obs: np.ndarray):
        return self.net.forward(obs)

    def sample(self, obs: np.ndarray, rng: np.random.Generator):
        """Return ``(raw_action, env_action, log_prob)``."""
        z, _ = self.net.forward(obs)
        raw, logp = self.head.sample(z, rng)
        return raw, self.head.to_env(raw), logp

    def log_prob(self, obs: np.ndarray, raw: np.ndarray) -> np.ndarray:
        return self.head.log_prob(self.net(obs), raw)

    def greedy(self, obs: np.ndarray) -> np.ndarray:
        """Deterministic action in env space (Beta mean, or squashed Gaussian mean)."""
        return self.head.to_env(self.head.mode(self.net(obs)))


class AttentionCritic:
    """Per-type feature MLPs -> multi-head attention -> value MLP on ``[x_i, o_i]``.

    ``group`` selects whose values the final MLP produces (``"mu"`` or ``"uav"``).
    """

    uses_attention = True

    def __init__(self, mu_obs_dim: int, uav_obs_dim: int, group: str, hidden: int = 128,
                 feature: int = 64, heads: int = 4, rng: np.random.Generator | None = None):
        self.group = group
        self.feat_mu = Mlp((mu_obs_dim, hidden, feature), rng, prefix="critic.feat_mu.")
        self.feat_uav = Mlp((uav_obs_dim, hidden, feature), rng, prefix="critic.feat_uav.")
        self.attn = MultiHeadAttention(feature, heads, feature // heads, rng, prefix="critic.attn.")
        own = mu_obs_dim if group == "mu" else uav_obs_dim
        self.head = Mlp((self.attn.d_out + own, hidden, 1), rng, prefix="critic.head.")
        self.params = {**self.feat_mu.params, **self.feat_uav.params, **self.attn.params,
                       **self.head.params}

    def forward(self, mu_obs: np.ndarray, uav_obs: np.ndarray):
        K = mu_obs.shape[1]
        e_mu, c_mu = self.feat_mu.forward(mu_obs)
        e_uav, c_uav = self.feat_uav.forward(uav_obs)
        E = np.concatenate([e_mu, e_uav], axis=1)
        X, c_att = self.attn.forward(E)
        own = mu_obs if self.group == "mu" else uav_obs
        sel = slice(0, K) if self.group == "mu" else slice(K, None)
        v, c_head = self.head.forward(np.concatenate([X[:, sel], own], axis=-1))
        return v[..., 0], (K, sel, X.shape, c_mu, c_uav, c_att, c_head)

    def __call__(self, mu_obs, uav_obs) -> np.ndarray:
        return self.forward(mu_obs, uav_obs)[0]

    def backward(self, cache, dv: np.ndarray) -> dict[str, np.ndarray]:
        K, sel, x_shape, c_mu, c_uav, c_att, c_head = cache
        d_in, grads = self.head.backward(c_head, dv[..., None])
        dX = np.zeros(x_shape)
        dX[:, sel] = d_in[..., :x_shape[-1]]
        dE, g = self.attn.backward(c_att, dX)
        grads.update(g)
        _, g = self.feat_mu.backward(c_mu, dE[:, :K])
        grads.update(g)
        _, g = self.feat_uav.backward(c_uav, dE[:, K:])
        grads.update(g)
        return grads


class FlatCritic:
    """Attention-free critic: value MLP on ``[flattened global state, o_i]``."""

    uses_attention = False

    def __init__(self, mu_obs_dim: int, uav_obs_dim: int, group: str, num_mus: int, num_uavs: int,
                 hidden: int = 128, rng: np.random.Generator | None = None):
        self.group = group
        own = mu_obs_dim if group == "mu" else uav_obs_dim
        state_dim = num_mus * mu_obs_dim + num_uavs * uav_obs_dim
        self.head = Mlp((state_dim + own, hidden, 1), rng, prefix="critic.head.")
        self.params = dict(self.head.params)

    def forward(self, mu_obs: np.ndarray, uav_obs: np.ndarray):
        B = mu_obs.shape[0]
        s = np.concatenate([mu_obs.reshape(B, -1), uav_obs.reshape(B, -1)], axis=1)
        own = mu_obs if self.group == "mu" else uav_obs
        n = own.shape[1]
        inp = np.concatenate([np.broadcast_to(s[:, None, :], (B, n, s.shape[1])), own], axis=-1)
        v, cache = self.head.forward(inp)
        return v[..., 0], cache

    def __call__(self, mu_obs, uav_obs) -> np.ndarray:
        return self.forward(mu_obs, uav_obs)[0]

    def backward(self, cache, dv: np.ndarray) -> dict[str, np.ndarray]:
        return self.head.backward(cache, dv[..., None])[1]

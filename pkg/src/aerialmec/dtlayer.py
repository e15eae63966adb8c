"""Digital-twin store: estimated positions, frequencies and association rows.

Physical truth drives transitions and rewards; agents observe the twins.
Each MU and UAV owns an independent deviation stream spawned from one
``SeedSequence``, so the order entities are updated in never changes any
entity's draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DeviationModel


def draw_freq_deviation(f_est, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Multiplicative uniform error: ``f_est * U(-rate, rate)``."""
    f_est = np.asarray(f_est, dtype=float)
    if np.any(f_est < 0):
        raise ValueError("draw_freq_deviation: negative frequency")
    return f_est * rng.uniform(-rate, rate, size=f_est.shape)


def noisy_position(p, rate: float, width: float, rng: np.random.Generator) -> np.ndarray:
    """Perturb the horizontal coordinates by ``U(-rate*W, rate*W)`` and clamp."""
    p = np.array(p, dtype=float, copy=True)
    offset = rng.uniform(-rate * width, rate * width, size=p[..., :2].shape)
    p[..., :2] = np.clip(p[..., :2] + offset, 0.0, width)
    return p


@dataclass
class MuTwin:
    position: np.ndarray  # (K, 3) estimated
    bits: np.ndarray
    cycles_per_bit: np.ndarray
    est_local_freq: np.ndarray


@dataclass
class UavTwin:
    position: np.ndarray  # (M, 3) estimated
    association: np.ndarray  # (K, M) 0/1
    est_alloc_freq: np.ndarray  # (K, M) Hz


@dataclass
class TwinStore:
    """Twins plus the per-entity deviation streams."""

    model: DeviationModel
    width: float
    mu_rngs: list[np.random.Generator]
    uav_rngs: list[np.random.Generator]
    mu: MuTwin | None = None
    uav: UavTwin | None = None
    slot: int = field(default=0)

    @classmethod
    def create(cls, model: DeviationModel, width: float, num_mus: int, num_uavs: int,
               seed_seq: np.random.SeedSequence) -> "TwinStore":
        children = seed_seq.spawn(num_mus + num_uavs)
        return cls(model, width,
                   [np.random.default_rng(s) for s in children[:num_mus]],
                   [np.random.default_rng(s) for s in children[num_mus:]])

    @property
    def freq_active(self) -> bool:
        return self.model.enabled and self.model.freq_rate > 0

    @property
    def loc_active(self) -> bool:
        return self.model.enabled and self.model.loc_rate > 0

    def freq_deviation_local(self, f_est: np.ndarray) -> np.ndarray:
        """Deviation of each MU's local clock, one draw per MU per slot."""
        if not self.freq_active:
            return np.zeros_like(f_est, dtype=float)
        return np.array([draw_freq_deviation(f, self.model.freq_rate, g)
                         for f, g in zip(f_est, self.mu_rngs)], dtype=float)

    def freq_deviation_edge(self, f_est: np.ndarray) -> np.ndarray:
        """Deviation of UAV clocks; ``f_est`` is (K, M), one stream per UAV column."""
        if not self.freq_active:
            return np.zeros_like(f_est, dtype=float)
        out = np.empty_like(f_est, dtype=float)
        for m, g in enumerate(self.uav_rngs):
            out[:, m] = draw_freq_deviation(f_est[:, m], self.model.freq_rate, g)
        return out

    def _estimate_positions(self, positions: np.ndarray, rngs: list[np.random.Generator]) -> np.ndarray:
        if not self.loc_active:
            return np.array(positions, dtype=float, copy=True)
        return np.stack([noisy_position(p, self.model.loc_rate, self.width, g)
                         for p, g in zip(positions, rngs)])

    def sync(self, mu_position, bits, cycles_per_bit, est_local_freq,
             uav_position, association, est_alloc_freq, slot: int) -> None:
        """Refresh every twin from the physical world after a slot executes."""
        self.mu = MuTwin(self._estimate_positions(mu_position, self.mu_rngs),
                         np.array(bits, dtype=float), np.array(cycles_per_bit, dtype=float),
                         np.array(est_local_freq, dtype=float))
        self.uav = UavTwin(self._estimate_positions(uav_position, self.uav_rngs),
                           np.array(association, dtype=float), np.array(est_alloc_freq, dtype=float))
        self.slot = slot

    def snapshot(self) -> dict:
        return {
            "slot": self.slot,
            "mu_position": self.mu.position[:, :2].tolist(),
            "uav_position": self.uav.position[:, :2].tolist(),
            "est_local_freq": self.mu.est_local_freq.tolist(),
            "association": self.uav.association.astype(int).tolist(),
            "est_alloc_freq": self.uav.est_alloc_freq.tolist(),
        }

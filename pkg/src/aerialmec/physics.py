"""MU mobility and the air-ground / air-BS channel and rate models.

Positions are numpy arrays whose last axis is (x, y, z) in meters. Every
function broadcasts over leading axes so the environment can evaluate all
MU-UAV pairs at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .config import ChannelParams, MobilityParams


@dataclass
class MuKinematics:
    """Ground-user state; arrays are shaped (K, 3), (K,), (K,)."""

    position: np.ndarray
    speed: np.ndarray
    heading: np.ndarray

    def copy(self) -> "MuKinematics":
        return MuKinematics(self.position.copy(), self.speed.copy(), self.heading.copy())


def step_mobility(state: MuKinematics, p: MobilityParams, dt: float, rng: np.random.Generator,
                  width: float | None = None, mean_heading: np.ndarray | float = 0.0,
                  noise: tuple[np.ndarray, np.ndarray] | None = None) -> MuKinematics:
    """Advance the Gauss-Markov random walk by one slot.

    The position moves with the *previous* speed and heading; the new speed
    and heading then take fresh Gaussian innovations. ``noise`` injects the
    (speed, heading) innovations directly, bypassing ``rng``.
    """
    speed = np.asarray(state.speed, dtype=float)
    heading = np.asarray(state.heading, dtype=float)
    if noise is None:
        phi = rng.normal(p.speed_noise_mean, np.sqrt(p.speed_noise_var), size=speed.shape)
        psi = rng.normal(p.heading_noise_mean, np.sqrt(p.heading_noise_var), size=heading.shape)
    else:
        phi, psi = (np.asarray(n, dtype=float) for n in noise)

    pos = np.array(state.position, dtype=float, copy=True)
    pos[..., 0] += speed * np.cos(heading) * dt
    pos[..., 1] += speed * np.sin(heading) * dt
    if width is not None:
        np.clip(pos[..., :2], 0.0, width, out=pos[..., :2])

    new_speed = p.mu1 * speed + (1.0 - p.mu1) * p.mean_speed + np.sqrt(1.0 - p.mu1 ** 2) * phi
    new_heading = (p.mu2 * heading + (1.0 - p.mu2) * mean_heading
                   + np.sqrt(1.0 - p.mu2 ** 2) * psi)
    return MuKinematics(pos, np.maximum(new_speed, 0.0), new_heading)


def horizontal_distance(u: np.ndarray, q: np.ndarray) -> np.ndarray:
    d = np.asarray(q, dtype=float)[..., :2] - np.asarray(u, dtype=float)[..., :2]
    return np.hypot(d[..., 0], d[..., 1])


def distance(u: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.asarray(q, dtype=float) - np.asarray(u, dtype=float), axis=-1)


def elevation_angle_deg(u: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elevation of ``q`` seen from ``u``; 90 degrees directly overhead."""
    u = np.asarray(u, dtype=float)
    q = np.asarray(q, dtype=float)
    height = q[..., 2] - u[..., 2]
    # arctan2 gives exactly 90 degrees at zero horizontal distance.
    return np.degrees(np.arctan2(height, horizontal_distance(u, q)))


def los_probability(theta_deg: np.ndarray | float, a: float, b: float) -> np.ndarray:
    # 1 / (1 + a exp(-b(theta - a))) written as a logistic to avoid overflow
    return expit(b * (np.asarray(theta_deg, dtype=float) - a) - np.log(a))


def air_ground_gain(u: np.ndarray, q: np.ndarray, cp: ChannelParams) -> np.ndarray:
    """Expected power gain of the MU-UAV link, LoS/NLoS mixed by elevation."""
    d = distance(u, q)
    if np.any(d <= 0):
        raise ValueError("air_ground_gain: MU and UAV are co-located")
    p_los = los_probability(elevation_angle_deg(u, q), cp.a, cp.b)
    return cp.beta0 * (p_los + cp.nlos_atten * (1.0 - p_los)) / d ** cp.path_loss_exp


def relay_gain(q: np.ndarray, u_bs: np.ndarray, beta0: float) -> np.ndarray:
    """Free-space LoS gain of the UAV-BS relay link."""
    d2 = np.sum((np.asarray(q, dtype=float) - np.asarray(u_bs, dtype=float)) ** 2, axis=-1)
    if np.any(d2 <= 0):
        raise ValueError("relay_gain: UAV and BS are co-located")
    return beta0 / d2


def uplink_rate(bandwidth: np.ndarray | float, p_tx: float, gain: np.ndarray | float,
                noise_density: float) -> np.ndarray:
    """Shannon rate of an OFDMA slice; a zero-width slice carries 0 bit/s."""
    bw = np.asarray(bandwidth, dtype=float)
    if np.any(bw < 0):
        raise ValueError("uplink_rate: negative bandwidth")
    safe = np.where(bw > 0, bw, 1.0)
    rate = safe * np.log2(1.0 + p_tx * np.asarray(gain, dtype=float) / (safe * noise_density))
    return np.where(bw > 0, rate, 0.0)


def relay_rate(relay_bandwidth: float, p_uav: float, gain: np.ndarray | float,
               noise_density: float) -> np.ndarray:
    return uplink_rate(relay_bandwidth, p_uav, gain, noise_density)

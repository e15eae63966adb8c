"""Task generation, local/edge latency with DT frequency deviation, and energy.

Scalar helpers broadcast over numpy arrays; ``edge_pipeline`` evaluates a
whole slot's offloaded traffic in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import EnvConfig, UavPowerParams


@dataclass
class TaskSpec:
    bits: np.ndarray
    cycles_per_bit: np.ndarray
    deadline: float

    @property
    def cycles(self) -> np.ndarray:
        return self.bits * self.cycles_per_bit


def generate_task(rng: np.random.Generator, cfg: EnvConfig, size: int | None = None) -> TaskSpec:
    bits = rng.uniform(cfg.task_bits_min, cfg.task_bits_max, size=size)
    cycles = rng.uniform(cfg.task_cycles_min, cfg.task_cycles_max, size=size)
    return TaskSpec(np.asarray(bits, dtype=float), np.asarray(cycles, dtype=float), cfg.slot)


def required_local_frequency(bits, cycles_per_bit, rho, dt: float, f_max: float) -> np.ndarray:
    """DVFS: the slowest clock that finishes the local share within ``dt``."""
    y_loc = (1.0 - np.asarray(rho, dtype=float)) * bits * cycles_per_bit
    return np.minimum(y_loc / dt, f_max)


def latency_gap(cycles, f_est, f_dev) -> np.ndarray:
    """Extra time when the actual clock is ``f_est + f_dev`` instead of ``f_est``."""
    f_est = np.asarray(f_est, dtype=float)
    f_dev = np.asarray(f_dev, dtype=float)
    if np.any(f_est <= 0):
        raise ValueError("latency_gap: estimated frequency must be positive")
    if np.any(f_est + f_dev <= 0):
        raise ValueError("latency_gap: actual frequency must be positive")
    return -np.asarray(cycles, dtype=float) * f_dev / (f_est * (f_est + f_dev))


def _compute_time(cycles, f_est, f_dev) -> np.ndarray:
    cycles = np.asarray(cycles, dtype=float)
    active = cycles > 0
    f_e = np.where(active, f_est, 1.0)
    f_d = np.where(active, f_dev, 0.0)
    return np.where(active, cycles / f_e + latency_gap(cycles, f_e, f_d), 0.0)


def local_compute(bits, cycles_per_bit, rho, f_est, f_dev, kappa: float):
    """Return (time, energy) of the locally executed share.

    Energy is charged at the actual clock ``f_est + f_dev``.
    """
    y_loc = (1.0 - np.asarray(rho, dtype=float)) * bits * cycles_per_bit
    time = _compute_time(y_loc, f_est, f_dev)
    f_act = np.asarray(f_est, dtype=float) + np.asarray(f_dev, dtype=float)
    energy = np.where(y_loc > 0, kappa * f_act ** 2 * y_loc, 0.0)
    return time, energy


def edge_pipeline(bits, cycles_per_bit, rho, to_uav, relay, uplink, relay_rate_bps,
                  f_est_edge, f_dev_edge, cfg: EnvConfig):
    """Offloaded share of each MU task.

    ``to_uav`` marks MUs associated with some UAV, ``relay`` those whose share
    continues to the BS. ``uplink``/``relay_rate_bps`` are the MU's link rate
    and its serving UAV's relay rate. Returns
    ``(edge_time, offload_energy, uav_compute_energy, edge_cycles, infeasible)``;
    an offloading MU with no usable rate or frequency is charged two slots.
    """
    rho = np.where(to_uav, np.asarray(rho, dtype=float), 0.0)
    off_bits = rho * bits
    offloading = off_bits > 0
    relay = np.asarray(relay, dtype=bool) & offloading
    compute = offloading & ~relay
    penalty_time = 2.0 * cfg.slot

    uplink = np.asarray(uplink, dtype=float)
    no_link = offloading & (uplink <= 0)
    sending = offloading & ~no_link
    t_off = np.where(sending, off_bits / np.where(sending, uplink, 1.0), 0.0)
    t_off = np.where(no_link, penalty_time, t_off)

    rr = np.asarray(relay_rate_bps, dtype=float)
    t_rel = np.where(relay & (rr > 0), off_bits / np.where(rr > 0, rr, 1.0), 0.0)
    t_rel = np.where(relay & (rr <= 0), penalty_time, t_rel)

    y_edge = np.where(compute, off_bits * cycles_per_bit, 0.0)
    f_est_edge = np.asarray(f_est_edge, dtype=float)
    no_cpu = compute & (f_est_edge <= 0)
    ok = compute & ~no_cpu
    t_ecmp = _compute_time(np.where(ok, y_edge, 0.0), np.where(ok, f_est_edge, 1.0),
                           np.where(ok, f_dev_edge, 0.0))
    t_ecmp = np.where(no_cpu, penalty_time, t_ecmp)

    edge_time = np.where(offloading, t_off + t_rel + t_ecmp, 0.0)
    offload_energy = cfg.p_mu * np.where(no_link, 0.0, t_off)
    f_act = f_est_edge + np.asarray(f_dev_edge, dtype=float)
    compute_energy = np.where(ok, cfg.kappa * f_act ** 2 * y_edge, 0.0)
    return edge_time, offload_energy, compute_energy, y_edge, no_link | no_cpu


def propulsion_energy(speed, pp: UavPowerParams, dt: float) -> np.ndarray:
    """Rotary-wing flight energy over ``dt`` at horizontal speed ``speed``."""
    v = np.asarray(speed, dtype=float)
    if np.any(v < 0):
        raise ValueError("propulsion_energy: speed must be non-negative")
    parasite = 0.5 * pp.drag_ratio * pp.air_density * pp.solidity * pp.disc_area * v ** 3
    profile_pow = 2 if pp.squared_profile_term else 3
    blade = pp.p0 * (1.0 + 3.0 * v ** profile_pow / pp.u_tip ** 2)
    induced = pp.pi * (np.sqrt(1.0 + v ** 4 / (4.0 * pp.v0 ** 4)) - v ** 2 / (2.0 * pp.v0 ** 2))
    return (parasite + blade + induced) * dt


def weighted_objective(uav_energy, mu_energy, weight: float) -> float:
    return float(weight * np.sum(uav_energy) + np.sum(mu_energy))


def deadline_violation(time, deadline: float) -> np.ndarray:
    return np.maximum(np.asarray(time, dtype=float) - deadline, 0.0)

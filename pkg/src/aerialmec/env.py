"""Multi-agent UAV edge-computing decision process.

Per slot the MUs decide association and offloading share first, then the
UAVs see those requests and allocate bandwidth, CPU frequency and
acceleration. ``step`` evaluates everything on physical truth, while
observations are built from the digital twins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import physics, tasking
from .config import EnvConfig
from .dtlayer import TwinStore

# Floor for entries that must be strictly positive once an MU is associated.
SHARE_FLOOR = 1e-6


@dataclass
class MuAction:
    assoc: np.ndarray  # (K,) 0 = local, m = UAV m (1-based)
    relay: np.ndarray  # (K,) bool, relay the share to the BS
    rho: np.ndarray  # (K,) offloaded fraction

    def association_matrix(self, num_uavs: int) -> np.ndarray:
        """(K, M) 0/1 matrix of MU-UAV links."""
        return (self.assoc[:, None] == np.arange(1, num_uavs + 1)[None, :]).astype(float)


@dataclass
class UavAction:
    bandwidth: np.ndarray  # (K, M) Hz
    freq: np.ndarray  # (K, M) estimated Hz
    accel: np.ndarray  # (M, 2) m/s^2


@dataclass
class EnvState:
    mu: physics.MuKinematics
    mean_heading: np.ndarray
    bits: np.ndarray
    cycles_per_bit: np.ndarray
    uav_position: np.ndarray  # (M, 3)
    uav_velocity: np.ndarray  # (M, 2)
    prev_load: np.ndarray  # (M,) cycles computed on each UAV last slot
    slot: int = 0


@dataclass
class StepReport:
    mu_reward: np.ndarray
    uav_reward: np.ndarray
    mu_energy: np.ndarray
    local_energy: np.ndarray
    offload_energy: np.ndarray
    uav_energy: np.ndarray
    fly_energy: np.ndarray
    edge_energy: np.ndarray
    local_time: np.ndarray
    edge_time: np.ndarray
    latency_penalty: np.ndarray
    boundary_penalty: np.ndarray
    collision_penalty: np.ndarray
    distance_penalty: np.ndarray
    association: np.ndarray
    relay: np.ndarray
    rho: np.ndarray
    uav_position: np.ndarray
    mu_position: np.ndarray
    objective: float
    mu_weighted_energy: float
    jain: float
    slot: int
    done: bool
    extras: dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for name, value in self.__dict__.items():
            if name == "extras":
                out.update(value)
            elif isinstance(value, np.ndarray):
                out[name] = value.tolist()
            else:
                out[name] = value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


def mu_action_dim(num_uavs: int) -> int:
    return num_uavs + 3


def uav_action_dim(num_mus: int) -> int:
    return 2 * num_mus + 2


def mu_obs_dim(num_uavs: int) -> int:
    return 2 + 2 * num_uavs + 2 + num_uavs


def uav_obs_dim(num_mus: int, num_uavs: int) -> int:
    return 5 * num_mus + 2 + 2 * (num_uavs - 1)


def remap_mu_action(raw: np.ndarray, num_uavs: int) -> MuAction:
    """Map raw [0,1] vectors (one row per MU) onto feasible MU decisions.

    Entries ``0..M`` score {local, UAV 1..M}; the argmax wins, ties to the
    lowest index. Entry ``M+1`` is rounded into the BS-relay flag and entry
    ``M+2`` is the offloaded share, masked to zero for local execution.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    if raw.shape[1] != mu_action_dim(num_uavs):
        raise ValueError(f"MU action needs {mu_action_dim(num_uavs)} entries, got {raw.shape[1]}")
    assoc = np.argmax(raw[:, :num_uavs + 1], axis=1)
    offload = assoc != 0
    relay = offload & (raw[:, num_uavs + 1] >= 0.5)
    rho = np.where(offload, np.clip(raw[:, num_uavs + 2], SHARE_FLOOR, 1.0), 0.0)
    return MuAction(assoc.astype(int), relay, rho)


def _under_cap(x: np.ndarray, cap: float, measure) -> np.ndarray:
    """Step rows of ``x`` toward zero by ulps until ``measure(x) <= cap`` holds in float."""
    over = measure(x) > cap
    while np.any(over):
        mask = np.reshape(over, np.shape(over) + (1,) * (x.ndim - np.ndim(over)))
        x = np.where(mask, np.nextafter(x, 0.0), x)
        over = measure(x) > cap
    return x


def remap_uav_action(raw: np.ndarray, mu: MuAction, cfg: EnvConfig) -> UavAction:
    """Map raw [0,1] UAV vectors (one row per UAV) onto a feasible allocation.

    Bandwidth requests ``share * B`` only for associated MUs and are scaled
    down jointly when their total exceeds ``B``. CPU shares apply only to MUs
    computed on the UAV and are normalised so a UAV never exceeds its clock.
    """
    K, M = cfg.num_mus, cfg.num_uavs
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    if raw.shape != (M, uav_action_dim(K)):
        raise ValueError(f"UAV actions must be shaped {(M, uav_action_dim(K))}, got {raw.shape}")
    alpha = mu.association_matrix(M)
    on_uav = alpha * (1.0 - mu.relay.astype(float))[:, None]

    bw_share = np.clip(raw[:, :K].T, SHARE_FLOOR, 1.0) * alpha
    bandwidth = bw_share * cfg.channel.bandwidth
    total = bandwidth.sum()
    if total > cfg.channel.bandwidth:
        bandwidth = _under_cap(bandwidth * (cfg.channel.bandwidth / total), cfg.channel.bandwidth,
                               lambda x: x.sum())

    f_share = np.clip(raw[:, K:2 * K].T, SHARE_FLOOR, 1.0) * on_uav
    f_sum = f_share.sum(axis=0)
    scale = np.where(f_sum > 1.0, 1.0 / np.where(f_sum > 0, f_sum, 1.0), 1.0)
    freq = _under_cap((f_share * scale[None, :] * cfg.f_max_edge).T, cfg.f_max_edge,
                      lambda x: x.sum(axis=1)).T

    accel = (2.0 * raw[:, 2 * K:2 * K + 2] - 1.0) * cfg.a_max
    norm = np.linalg.norm(accel, axis=1)
    accel *= np.where(norm > cfg.a_max, cfg.a_max / np.where(norm > 0, norm, 1.0), 1.0)[:, None]
    accel = _under_cap(accel, cfg.a_max, lambda x: np.linalg.norm(x, axis=1))
    return UavAction(bandwidth, freq, accel)


def penalty_distance(q: np.ndarray, associates: np.ndarray, d_th: float, width: float) -> float:
    """Signed pull toward the centroid of the associated MUs (0 without any)."""
    associates = np.asarray(associates, dtype=float)
    if associates.size == 0:
        return 0.0
    centroid = associates[:, :2].mean(axis=0)
    return float((np.linalg.norm(np.asarray(q, dtype=float)[:2] - centroid) - d_th) / width)


def penalty_collision(q_all: np.ndarray, m: int, d_min: float, mu_c: float) -> float:
    q_all = np.asarray(q_all, dtype=float)
    d = np.linalg.norm(q_all[:, :2] - q_all[m, :2], axis=1)
    d = np.delete(d, m)
    return float(mu_c * np.sum(np.maximum((d_min - d) / d_min, 0.0)))


def jain_index(energy: np.ndarray) -> float:
    e = np.asarray(energy, dtype=float)
    sq = float(np.sum(e ** 2))
    if sq == 0.0:
        return 1.0
    return float(np.sum(e) ** 2 / (e.size * sq))


def _clip_norm(v: np.ndarray, limit: float) -> np.ndarray:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    return v * np.where(norm > limit, limit / np.where(norm > 0, norm, 1.0), 1.0)


class UavMecEnv:
    """Seedable K-MU / M-UAV environment.

    ``use_dt=False`` bypasses the twin layer entirely: observations read
    physical truth and no deviation is applied.
    """

    def __init__(self, cfg: EnvConfig, seed: int | None = 0, use_dt: bool = True):
        cfg.validate()
        self.cfg = cfg
        self.use_dt = use_dt
        self.K, self.M = cfg.num_mus, cfg.num_uavs
        self.bs = np.asarray(cfg.bs_position, dtype=float)
        self.state: EnvState | None = None
        self.twins: TwinStore | None = None
        self._pending: MuAction | None = None
        self.reset(seed)

    # ------------------------------------------------------------------ reset
    def reset(self, seed: int | np.random.SeedSequence | None = None) -> EnvState:
        cfg = self.cfg
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        world_ss, mob_ss, dt_ss = ss.spawn(3)
        self.rng = np.random.default_rng(world_ss)
        self.mobility_rng = np.random.default_rng(mob_ss)
        self.twins = TwinStore.create(cfg.deviation, cfg.width, self.K, self.M, dt_ss)

        mu_pos = np.zeros((self.K, 3))
        mu_pos[:, :2] = self.rng.uniform(0.0, cfg.width, size=(self.K, 2))
        mean_heading = self.rng.uniform(0.0, 2 * np.pi, size=self.K)
        uav_pos = np.full((self.M, 3), cfg.uav_altitude)
        uav_pos[:, :2] = self.rng.uniform(0.0, cfg.width, size=(self.M, 2))
        task = tasking.generate_task(self.rng, cfg, size=self.K)
        self.state = EnvState(
            mu=physics.MuKinematics(mu_pos, np.full(self.K, cfg.mobility.mean_speed),
                                    mean_heading.copy()),
            mean_heading=mean_heading,
            bits=task.bits, cycles_per_bit=task.cycles_per_bit,
            uav_position=uav_pos, uav_velocity=np.zeros((self.M, 2)),
            prev_load=np.zeros(self.M), slot=0)
        self._pending = None
        self._sync(np.zeros(self.K), np.zeros((self.K, self.M)), np.zeros((self.K, self.M)))
        return self.state

    def _sync(self, f_loc, alpha, freq) -> None:
        s = self.state
        self.twins.sync(s.mu.position, s.bits, s.cycles_per_bit, f_loc,
                        s.uav_position, alpha, freq, s.slot)

    # ----------------------------------------------------------- observation
    def _mu_view(self, noisy: bool) -> tuple[np.ndarray, np.ndarray]:
        s = self.state
        if noisy and self.use_dt:
            own = self.twins.mu.position if self.cfg.deviation.noisy_self_position else s.mu.position
            return own, self.twins.uav.position
        return s.mu.position, s.uav_position

    def observe_mu(self, k: int | None = None, noisy: bool = True) -> np.ndarray:
        """MU observation rows ``[own xy, UAV xy * M, L, C, UAV loads * M]`` in [0, 1]."""
        cfg, s = self.cfg, self.state
        own, uavs = self._mu_view(noisy)
        W = cfg.width
        load = np.clip(s.prev_load / (cfg.f_max_edge * cfg.slot), 0.0, 1.0)
        obs = np.concatenate([
            own[:, :2] / W,
            np.broadcast_to((uavs[:, :2] / W).ravel(), (self.K, 2 * self.M)),
            (s.bits / cfg.task_bits_max)[:, None],
            (s.cycles_per_bit / cfg.task_cycles_max)[:, None],
            np.broadcast_to(load, (self.K, self.M)),
        ], axis=1)
        obs = np.clip(obs, 0.0, 1.0)
        return obs if k is None else obs[k]

    def set_mu_actions(self, mu: MuAction) -> None:
        """Register the slot's MU decisions so UAVs can observe them."""
        self._pending = mu

    def observe_uav(self, m: int | None = None, noisy: bool = True,
                    pre_decision: bool = False) -> np.ndarray:
        """UAV observation rows ``[(rho, L, C, x, y) * K, own xy, other UAVs xy]``.

        ``rho`` is visible only for MUs associated with the observing UAV;
        ``pre_decision`` zeroes it (the state before MUs act).
        """
        cfg, s = self.cfg, self.state
        W = cfg.width
        if noisy and self.use_dt:
            mu_pos, uav_est = self.twins.mu.position, self.twins.uav.position
            own = uav_est if cfg.deviation.noisy_self_position else s.uav_position
        else:
            mu_pos, uav_est, own = s.mu.position, s.uav_position, s.uav_position
        if pre_decision or self._pending is None:
            rho_masked = np.zeros((self.K, self.M))
        else:
            rho_masked = self._pending.association_matrix(self.M) * self._pending.rho[:, None]
        common = np.stack([s.bits / cfg.task_bits_max, s.cycles_per_bit / cfg.task_cycles_max,
                           mu_pos[:, 0] / W, mu_pos[:, 1] / W], axis=1)
        rows = []
        for j in range(self.M):
            per_mu = np.concatenate([rho_masked[:, j:j + 1], common], axis=1).ravel()
            others = np.delete(uav_est[:, :2], j, axis=0).ravel() / W
            rows.append(np.concatenate([per_mu, own[j, :2] / W, others]))
        obs = np.clip(np.stack(rows), 0.0, 1.0)
        return obs if m is None else obs[m]

    # ------------------------------------------------------------------ step
    def step(self, mu: MuAction, uav: UavAction) -> StepReport:
        cfg, s = self.cfg, self.state
        K, M, dt = self.K, self.M, cfg.slot
        cp = cfg.channel
        alpha = mu.association_matrix(M)
        to_uav = mu.assoc > 0
        serving = np.clip(mu.assoc - 1, 0, M - 1)

        # communication
        gains = physics.air_ground_gain(s.mu.position[:, None, :], s.uav_position[None, :, :], cp)
        link_rate = physics.uplink_rate(uav.bandwidth * alpha, cfg.p_mu, gains, cp.noise_density)
        uplink = np.sum(alpha * link_rate, axis=1)
        rel_rate = physics.relay_rate(cp.relay_bandwidth, cfg.p_uav,
                                      physics.relay_gain(s.uav_position, self.bs, cp.beta0),
                                      cp.noise_density)
        mu_relay_rate = np.where(to_uav, rel_rate[serving], 0.0)

        # local computing with DVFS and the twin's frequency deviation
        f_loc = tasking.required_local_frequency(s.bits, s.cycles_per_bit, mu.rho, dt, cfg.f_max_loc)
        f_loc_dev = self.twins.freq_deviation_local(f_loc) if self.use_dt else np.zeros(K)
        t_loc, e_loc = tasking.local_compute(s.bits, s.cycles_per_bit, mu.rho, f_loc, f_loc_dev,
                                             cfg.kappa)

        # edge computing
        freq = uav.freq * alpha * (1.0 - mu.relay.astype(float))[:, None]
        f_dev_all = self.twins.freq_deviation_edge(freq) if self.use_dt else np.zeros((K, M))
        f_edge = np.sum(freq, axis=1)
        f_edge_dev = np.sum(f_dev_all * alpha, axis=1)
        t_edge, e_off, e_cmp, y_edge, _ = tasking.edge_pipeline(
            s.bits, s.cycles_per_bit, mu.rho, to_uav, mu.relay, uplink, mu_relay_rate,
            f_edge, f_edge_dev, cfg)
        mu_energy = e_loc + e_off

        # UAV flight under speed/acceleration limits; boundary stops the UAV
        v_old = s.uav_velocity
        v_new = _clip_norm(v_old + uav.accel * dt, cfg.v_max)
        target = s.uav_position[:, :2] + 0.5 * (v_old + v_new) * dt
        clipped = np.clip(target, 0.0, cfg.width)
        hit = clipped != target
        v_new = np.where(hit, 0.0, v_new)
        boundary = cfg.mu_boundary * np.linalg.norm(target - clipped, axis=1)
        flown = np.linalg.norm(clipped - s.uav_position[:, :2], axis=1) / dt
        e_fly = tasking.propulsion_energy(flown, cfg.power, dt)
        e_edge = alpha.T @ e_cmp
        uav_energy = e_fly + e_edge

        # rewards
        p_lat = (cfg.mu_latency / dt) * (tasking.deadline_violation(t_loc, dt)
                                         + tasking.deadline_violation(t_edge, dt))
        mu_reward = -mu_energy - alpha @ (cfg.weight * uav_energy) - to_uav * p_lat
        new_q = s.uav_position.copy()
        new_q[:, :2] = clipped
        collision = np.array([penalty_collision(new_q, j, cfg.d_min, cfg.mu_collision)
                              for j in range(M)])
        dist = np.array([penalty_distance(new_q[j], s.mu.position[alpha[:, j] > 0], cfg.d_th, cfg.width)
                         for j in range(M)])
        uav_reward = (-cfg.weight * uav_energy - alpha.T @ (mu_energy + p_lat)
                      - boundary - collision - dist)

        objective = tasking.weighted_objective(uav_energy, mu_energy, cfg.weight)
        mu_weighted = float(np.mean(mu_energy + alpha @ (cfg.weight * uav_energy)))
        report = StepReport(
            mu_reward=mu_reward, uav_reward=uav_reward, mu_energy=mu_energy,
            local_energy=e_loc, offload_energy=e_off, uav_energy=uav_energy,
            fly_energy=e_fly, edge_energy=e_edge, local_time=t_loc, edge_time=t_edge,
            latency_penalty=p_lat, boundary_penalty=boundary, collision_penalty=collision,
            distance_penalty=dist, association=mu.assoc.copy(), relay=mu.relay.copy(),
            rho=mu.rho.copy(), uav_position=new_q[:, :2].copy(),
            mu_position=s.mu.position[:, :2].copy(), objective=objective,
            mu_weighted_energy=mu_weighted, jain=jain_index(mu_energy),
            slot=s.slot, done=(s.slot + 1) % cfg.slots_per_period == 0)

        # transition
        s.uav_position = new_q
        s.uav_velocity = v_new
        s.prev_load = alpha.T @ y_edge
        s.mu = physics.step_mobility(s.mu, cfg.mobility, dt, self.mobility_rng, width=cfg.width,
                                     mean_heading=s.mean_heading)
        task = tasking.generate_task(self.rng, cfg, size=K)
        s.bits, s.cycles_per_bit = task.bits, task.cycles_per_bit
        s.slot += 1
        self._pending = None
        self._sync(f_loc, alpha, freq)
        return report

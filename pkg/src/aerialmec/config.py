"""Configuration dataclasses and the YAML loader.

Defaults describe the full-scale scenario (K=60 MUs, M=10 UAVs, 1000 m
square). ``desk_profile`` gives the reduced scenario the acceptance suite
trains on.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    """Raised for unparsable files, unknown keys, or out-of-range values."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_per_hz_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass
class ChannelParams:
    a: float = 15.0
    b: float = 0.5
    beta0: float = db_to_linear(-30.0)
    path_loss_exp: float = 2.2
    nlos_atten: float = 0.2
    noise_density: float = dbm_per_hz_to_watt(-127.0)
    bandwidth: float = 50e6
    relay_bandwidth: float = 10e6

    def validate(self) -> None:
        _positive(self, "a", "b", "beta0", "noise_density", "bandwidth", "relay_bandwidth")
        if not 0.0 < self.nlos_atten <= 1.0:
            raise ConfigError(f"channel.nlos_atten must lie in (0, 1], got {self.nlos_atten}")
        if self.path_loss_exp < 2.0:
            raise ConfigError(f"channel.path_loss_exp must be >= 2, got {self.path_loss_exp}")


@dataclass
class UavPowerParams:
    p0: float = 39.04
    pi: float = 79.07
    u_tip: float = 120.0
    v0: float = 3.6
    drag_ratio: float = 0.6
    solidity: float = 0.05
    air_density: float = 1.225
    disc_area: float = 0.503
    # False uses a cubic blade-profile speed term (default); True uses v**2.
    squared_profile_term: bool = False

    def validate(self) -> None:
        _positive(self, "p0", "pi", "u_tip", "v0", "drag_ratio", "solidity",
                  "air_density", "disc_area")


@dataclass
class MobilityParams:
    mu1: float = 0.5
    mu2: float = 0.5
    mean_speed: float = 1.0
    speed_noise_mean: float = 0.0
    speed_noise_var: float = 1.0
    heading_noise_mean: float = 0.0
    heading_noise_var: float = 1.0

    def validate(self) -> None:
        for name in ("mu1", "mu2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"mobility.{name} must lie in [0, 1], got {v}")
        for name in ("speed_noise_var", "heading_noise_var", "mean_speed"):
            if getattr(self, name) < 0:
                raise ConfigError(f"mobility.{name} must be >= 0")


@dataclass
class DeviationModel:
    freq_rate: float = 0.0
    loc_rate: float = 0.0
    enabled: bool = True
    # When False an entity's own position is observed exactly.
    noisy_self_position: bool = False

    def validate(self) -> None:
        for name in ("freq_rate", "loc_rate"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"deviation.{name} must lie in [0, 1), got {v}")


@dataclass
class EnvConfig:
    num_mus: int = 60
    num_uavs: int = 10
    width: float = 1000.0
    uav_altitude: float = 200.0
    bs_position: tuple[float, float, float] = (-500.0, 0.0, 10.0)
    slot: float = 1.0
    slots_per_period: int = 60
    p_mu: float = 0.2
    p_uav: float = 0.5
    kappa: float = 1e-27
    f_max_loc: float = 1e9
    f_max_edge: float = 10e9
    v_max: float = 30.0
    a_max: float = 5.0
    d_min: float = 50.0
    d_th: float = 300.0
    weight: float = 0.001
    mu_latency: float = 0.1
    mu_boundary: float = 0.1
    mu_collision: float = 0.1
    task_bits_min: float = 5e5
    task_bits_max: float = 1.5e6
    task_cycles_min: float = 500.0
    task_cycles_max: float = 1500.0
    channel: ChannelParams = field(default_factory=ChannelParams)
    power: UavPowerParams = field(default_factory=UavPowerParams)
    mobility: MobilityParams = field(default_factory=MobilityParams)
    deviation: DeviationModel = field(default_factory=DeviationModel)

    @property
    def K(self) -> int:
        return self.num_mus

    @property
    def M(self) -> int:
        return self.num_uavs

    def validate(self) -> None:
        if self.num_mus < 1 or self.num_uavs < 1:
            raise ConfigError("num_mus and num_uavs must be >= 1")
        _positive(self, "width", "uav_altitude", "slot", "slots_per_period", "p_mu", "p_uav",
                  "kappa", "f_max_loc", "f_max_edge", "v_max", "a_max", "d_min",
                  "task_bits_min", "task_cycles_min")
        if self.weight < 0:
            raise ConfigError("weight must be >= 0")
        for name in ("mu_latency", "mu_boundary", "mu_collision"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not self.d_min < self.d_th <= self.width:
            raise ConfigError(
                f"need d_min < d_th <= width, got {self.d_min}, {self.d_th}, {self.width}")
        if self.task_bits_max < self.task_bits_min:
            raise ConfigError("task_bits_max must be >= task_bits_min")
        if self.task_cycles_max < self.task_cycles_min:
            raise ConfigError("task_cycles_max must be >= task_cycles_min")
        if len(self.bs_position) != 3:
            raise ConfigError("bs_position must have three coordinates")
        if self.uav_altitude <= self.bs_position[2]:
            raise ConfigError("uav_altitude must exceed the BS antenna height")
        self.channel.validate()
        self.power.validate()
        self.mobility.validate()
        self.deviation.validate()


@dataclass
class TrainConfig:
    total_steps: int = 80_000
    episode_length: int = 300
    ppo_epochs: int = 5
    minibatches: int = 1
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    gamma_mu: float = 0.8
    gamma_uav: float = 0.95
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    entropy_coef: float = 0.01
    max_grad_norm: float = 0.5
    hidden_size: int = 128
    feature_size: int = 64
    attention_heads: int = 4
    value_norm: bool = True

    @property
    def episodes(self) -> int:
        return max(1, self.total_steps // self.episode_length)

    def validate(self) -> None:
        _positive(self, "total_steps", "episode_length", "ppo_epochs", "minibatches",
                  "actor_lr", "critic_lr", "clip_eps", "max_grad_norm", "hidden_size",
                  "feature_size", "attention_heads")
        for name in ("gamma_mu", "gamma_uav", "gae_lambda"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"train.{name} must lie in [0, 1], got {v}")
        if self.entropy_coef < 0:
            raise ConfigError("train.entropy_coef must be >= 0")
        if self.feature_size % self.attention_heads:
            raise ConfigError("train.feature_size must be divisible by attention_heads")


VARIANTS = ("ab-mappo", "b-mappo", "ag-mappo", "random")


@dataclass
class ExperimentSpec:
    variant: str = "ab-mappo"
    seeds: list[int] = field(default_factory=lambda: [0])
    total_steps: int | None = None
    output_dir: str = "runs/default"
    workers: int = 1

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"experiment.variant must be one of {VARIANTS}, got {self.variant!r}")
        if not self.seeds:
            raise ConfigError("experiment.seeds needs at least one seed")
        if self.total_steps is not None and self.total_steps <= 0:
            raise ConfigError("experiment.total_steps must be positive")
        if self.workers < 1:
            raise ConfigError("experiment.workers must be >= 1")


def desk_profile() -> tuple[EnvConfig, TrainConfig]:
    """K=6, M=2, 500 m square, 300 episodes of 300 slots."""
    env = EnvConfig(num_mus=6, num_uavs=2, width=500.0)
    train = TrainConfig(total_steps=300 * 300)
    return env, train


def full_profile() -> tuple[EnvConfig, TrainConfig]:
    return EnvConfig(), TrainConfig()


PROFILES = {"desk": desk_profile, "full": full_profile}


def _positive(obj: Any, *names: str) -> None:
    section = type(obj).__name__
    for name in names:
        v = getattr(obj, name)
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ConfigError(f"{section}.{name} must be a positive number, got {v!r}")


def _coerce(value: Any, annotation: str, where: str) -> Any:
    # Annotations are strings under ``from __future__ import annotations``.
    if annotation == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean, got {value!r}")
        return value
    if annotation == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        try:
            f = float(value)
        except ValueError as exc:
            raise ConfigError(f"{where}: expected an integer, got {value!r}") from exc
        if f != int(f):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(f)
    if annotation == "float":
        if isinstance(value, bool):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: expected a number, got {value!r}") from exc
    if annotation.startswith("tuple"):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return tuple(_coerce(v, "float", where) for v in value)
    if annotation.startswith("list[int]"):
        if isinstance(value, int):
            value = [value]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list of integers, got {value!r}")
        return [_coerce(v, "int", where) for v in value]
    if annotation == "int | None":
        return None if value is None else _coerce(value, "int", where)
    if annotation == "str":
        return str(value)
    return value


def apply_overrides(obj: Any, overrides: dict[str, Any], prefix: str = "") -> Any:
    """Return a copy of dataclass ``obj`` with nested ``overrides`` applied.

    Unknown keys raise :class:`ConfigError` naming the offending path.
    """
    if not isinstance(overrides, dict):
        raise ConfigError(f"{prefix or 'config'}: expected a mapping, got {overrides!r}")
    fields = {f.name: f for f in dataclasses.fields(obj)}
    changes: dict[str, Any] = {}
    for key, value in overrides.items():
        where = f"{prefix}{key}"
        if key not in fields:
            raise ConfigError(f"unknown config key {where!r}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            changes[key] = apply_overrides(current, value, prefix=where + ".")
        else:
            changes[key] = _coerce(value, str(fields[key].type), where)
    return dataclasses.replace(obj, **changes)


def load_config(path: str | Path | None = None,
                overrides: dict[str, Any] | None = None,
                ) -> tuple[EnvConfig, TrainConfig, ExperimentSpec]:
    """Parse a YAML (or JSON) experiment file.

    Top-level keys: ``profile`` (``full`` or ``desk``), ``env``, ``train``,
    ``experiment``. A missing or empty file yields the full-scale defaults.
    """
    raw: dict[str, Any] = {}
    if path is not None:
        text = Path(path).read_text()
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        raw = loaded
    if overrides:
        raw = _deep_merge(raw, overrides)

    unknown = set(raw) - {"profile", "env", "train", "experiment"}
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    profile = raw.get("profile", "full")
    if profile not in PROFILES:
        raise ConfigError(f"profile must be one of {sorted(PROFILES)}, got {profile!r}")
    env, train = PROFILES[profile]()
    env = apply_overrides(env, raw.get("env") or {}, "env.")
    train = apply_overrides(train, raw.get("train") or {}, "train.")
    spec = apply_overrides(ExperimentSpec(), raw.get("experiment") or {}, "experiment.")
    if spec.total_steps is not None:
        train = dataclasses.replace(train, total_steps=spec.total_steps)
    env.validate()
    train.validate()
    spec.validate()
    return env, train, spec


def _deep_merge(base: dict[str, Any], extra: dict[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def to_dict(env: EnvConfig, train: TrainConfig, spec: ExperimentSpec | None = None) -> dict[str, Any]:
    out: dict[str, Any] = {"env": dataclasses.asdict(env), "train": dataclasses.asdict(train)}
    out["env"]["bs_position"] = list(env.bs_position)
    if spec is not None:
        out["experiment"] = dataclasses.asdict(spec)
    return out


def dump_resolved(path: str | Path, env: EnvConfig, train: TrainConfig,
                  spec: ExperimentSpec | None = None) -> None:
    """Write the fully resolved configuration (JSON, sorted keys)."""
    Path(path).write_text(json.dumps(to_dict(env, train, spec), indent=2, sort_keys=True) + "\n")


def from_dict(data: dict[str, Any]) -> tuple[EnvConfig, TrainConfig]:
    env = apply_overrides(EnvConfig(), data["env"], "env.")
    train = apply_overrides(TrainConfig(), data["train"], "train.")
    return env, train

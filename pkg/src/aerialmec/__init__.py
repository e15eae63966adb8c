"""Seedable multi-UAV edge-computing simulator with a multi-agent PPO trainer."""

from .config import EnvConfig, TrainConfig, load_config
from .env import UavMecEnv

__version__ = "0.1.0"

__all__ = ["EnvConfig", "TrainConfig", "UavMecEnv", "load_config"]

"""Multi-agent PPO with Beta or Gaussian policies and attention critics."""

from .networks import Actor, AttentionCritic, FlatCritic
from .ppo import ValueNorm, actor_loss, compute_gae, critic_loss, normalize_advantages
from .trainer import (METRIC_COLUMNS, AgentGroup, Rollout, TrainResult, build_groups,
                      collect_episode, evaluate, episode_metrics, load_checkpoint, prepare,
                      save_checkpoint, train, update)

__all__ = [
    "METRIC_COLUMNS", "Actor", "AgentGroup", "AttentionCritic", "FlatCritic", "Rollout",
    "TrainResult", "ValueNorm", "actor_loss", "build_groups", "collect_episode", "compute_gae",
    "critic_loss", "episode_metrics", "evaluate", "load_checkpoint", "normalize_advantages",
    "prepare", "save_checkpoint", "train", "update",
]

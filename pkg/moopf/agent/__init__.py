"""DDPG agent: networks, replay, exploration noise, updates, training loop and checkpoints."""

from moopf.agent.checkpoint import checkpoint_config, load_checkpoint, read_checkpoint, save_checkpoint
from moopf.agent.ddpg import (
    AgentPolicy,
    DDPGAgent,
    UpdateStats,
    actor_update,
    critic_targets,
    critic_update,
    make_optimizer,
    select_action,
    soft_update,
)
from moopf.agent.networks import MLP, actor_forward, build_actor, build_critic, critic_forward
from moopf.agent.noise import OUNoise, decayed_sigma
from moopf.agent.replay import ReplayBuffer
from moopf.agent.training import EpisodeRecord, TrainingLog, discounted_returns, train

__all__ = [
    "checkpoint_config",
    "load_checkpoint",
    "read_checkpoint",
    "save_checkpoint",
    "AgentPolicy",
    "DDPGAgent",
    "UpdateStats",
    "actor_update",
    "critic_targets",
    "critic_update",
    "make_optimizer",
    "select_action",
    "soft_update",
    "MLP",
    "actor_forward",
    "build_actor",
    "build_critic",
    "critic_forward",
    "OUNoise",
    "decayed_sigma",
    "ReplayBuffer",
    "EpisodeRecord",
    "TrainingLog",
    "discounted_returns",
    "train",
]

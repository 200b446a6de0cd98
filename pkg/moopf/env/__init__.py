"""The OPF decision process: load profile, reward stack and the environment."""

from moopf.env.environment import OPFEnv
from moopf.env.profile import LoadProfile
from moopf.env.rewards import (
    COMPONENT_NAMES,
    RewardBreakdown,
    RewardWeights,
    bound_violation,
    early_stop_check,
    reward_components,
)
from moopf.env.rollout import EpisodeTrace, Policy, rollout
from moopf.env.translog import TransitionLog, read_transition_log
from moopf.env.types import EnvState, StepResult, Transition

__all__ = [
    "OPFEnv",
    "LoadProfile",
    "COMPONENT_NAMES",
    "RewardBreakdown",
    "RewardWeights",
    "bound_violation",
    "early_stop_check",
    "reward_components",
    "TransitionLog",
    "read_transition_log",
    "EnvState",
    "StepResult",
    "Transition",
    "EpisodeTrace",
    "Policy",
    "rollout",
]

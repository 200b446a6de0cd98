from __future__ import annotations

import logging
from typing import Callable, Dict, Literal, Optional

import numpy as np

from moopf.baselines.base import LOWER, UPPER, SearchResult
from moopf.baselines.gwo import gwo_step_optimize
from moopf.baselines.hho import hho_step_optimize
from moopf.config import BaselineSection
from moopf.env.environment import OPFEnv
from moopf.env.rollout import EpisodeTrace, rollout
from moopf.env.types import EnvState
from moopf.errors import MoopfError

_LOGGER = logging.getLogger(__name__)

OptimizerName = Literal["hho", "gwo"]


def _hho(objective, dim, budget, *, rng, section: BaselineSection) -> SearchResult:
    return hho_step_optimize(objective, dim, budget, rng=rng, population=section.population, beta=section.levy_beta)


def _gwo(objective, dim, budget, *, rng, section: BaselineSection) -> SearchResult:
    return gwo_step_optimize(objective, dim, budget, rng=rng, population=section.population)


OPTIMIZERS: Dict[str, Callable[..., SearchResult]] = {"hho": _hho, "gwo": _gwo}


class HeuristicPolicy:
    """Greedy per-step search: maximize the one-step reward on a clone of the env."""

    def __init__(
        self,
        optimizer: OptimizerName,
        *,
        section: Optional[BaselineSection] = None,
        budget: Optional[int] = None,
        seed: int = 0,
    ) -> None:
        if optimizer not in OPTIMIZERS:
            raise MoopfError(f"unknown optimizer {optimizer!r}; expected one of {sorted(OPTIMIZERS)}")
        self.name = optimizer
        self.section = section if section is not None else BaselineSection()
        self.budget = int(budget if budget is not None else self.section.budget_per_step)
        if self.budget < 1:
            raise MoopfError("optimizer budget must be >= 1 evaluation")
        self.seed = int(seed)
        self._rng = np.random.default_rng(self.seed)
        self.last: Optional[SearchResult] = None

    def __call__(self, state: EnvState, env: OPFEnv) -> np.ndarray:
        trial = env.clone()
        result = OPTIMIZERS[self.name](
            trial.peek_reward, env.action_dim, self.budget, rng=self._rng, section=self.section
        )
        self.last = result
        return result.best

    def fork(self, seed: int) -> "HeuristicPolicy":
        return HeuristicPolicy(self.name, section=self.section, budget=self.budget, seed=seed)  # type: ignore[arg-type]


class RandomPolicy:
    """Uniform action in [-1, 1]^dim each step; the reference arm."""

    name = "random"

    def __init__(self, seed: int = 0) -> None:
        self.seed = int(seed)
        self._rng = np.random.default_rng(self.seed)

    def __call__(self, state: EnvState, env: OPFEnv) -> np.ndarray:
        return self._rng.uniform(LOWER, UPPER, env.action_dim)

    def fork(self, seed: int) -> "RandomPolicy":
        return RandomPolicy(seed)


def random_policy(seed: int = 0) -> RandomPolicy:
    return RandomPolicy(seed)


def run_heuristic_policy(
    env: OPFEnv,
    policy: HeuristicPolicy | RandomPolicy,
    *,
    seed: Optional[int] = None,
    horizon: Optional[int] = None,
) -> EpisodeTrace:
    """One episode driven by ``policy``; per-step decision wall time lands in the trace."""
    steps = int(horizon if horizon is not None else env.config.env.episode_length)
    trace = rollout(env, policy, seed=seed, horizon=steps)
    _LOGGER.info(
        "heuristic episode done",
        extra={
            "policy": policy.name,
            "steps": trace.steps,
            "cumulative_reward": trace.cumulative_reward,
            "mean_decision_seconds": float(trace.decision_seconds.mean()) if trace.steps else 0.0,
        },
    )
    return trace

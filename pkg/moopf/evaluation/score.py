"""SCORE: mean cumulative reward over N_eval episodes of at most T_end steps.

Each episode adds the step reward first and then stops on a failed
convergence gate, so the reward of the failing step counts.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd

from moopf.env.environment import OPFEnv
from moopf.env.rollout import EpisodeTrace, Policy, rollout
from moopf.seed import episode_seeds
from moopf.telemetry import timed

_LOGGER = logging.getLogger(__name__)

EnvFactory = Callable[[], OPFEnv]


@dataclass(frozen=True)
class ScoreReport:
    algorithm: str
    n_eval: int
    t_end: int
    score: float
    episode_rewards: Tuple[float, ...]
    mean_step_seconds: float
    divergences: int
    seeds: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def std(self) -> float:
        return float(np.std(self.episode_rewards)) if self.episode_rewards else 0.0

    def to_row(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "n_eval": self.n_eval,
            "t_end": self.t_end,
            "score": self.score,
            "std": self.std,
            "mean_step_seconds": self.mean_step_seconds,
            "divergences": self.divergences,
        }

    def episodes_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "episode": np.arange(len(self.episode_rewards)),
                "seed": list(self.seeds) if self.seeds else [None] * len(self.episode_rewards),
                "cumulative_reward": self.episode_rewards,
            }
        )


def _episode(env_factory: EnvFactory, policy: Policy, seed: int, t_end: int) -> EpisodeTrace:
    env = env_factory()
    return rollout(env, policy.fork(seed), seed=seed, horizon=t_end)


def score(
    env_factory: EnvFactory,
    policy: Policy,
    *,
    n_eval: int = 100,
    t_end: int = 100,
    seed: int = 0,
    workers: int = 1,
    name: Optional[str] = None,
) -> ScoreReport:
    """Run ``n_eval`` independent episodes and average their cumulative rewards.

    Episodes use fresh envs from ``env_factory`` and a policy forked with the
    episode seed, so the report is identical for any ``workers`` count.
    """
    algorithm = name or getattr(policy, "name", type(policy).__name__)
    seeds = episode_seeds(seed, n_eval, stream="score")
    with timed("eval.score", {"algorithm": algorithm, "n_eval": n_eval}):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                traces: List[EpisodeTrace] = list(
                    pool.map(lambda s: _episode(env_factory, policy, s, t_end), seeds)
                )
        else:
            traces = [_episode(env_factory, policy, s, t_end) for s in seeds]

    totals = tuple(t.cumulative_reward for t in traces)
    decisions = np.concatenate([t.decision_seconds for t in traces]) if traces else np.zeros(0)
    divergences = sum(1 for t in traces if t.diverged)
    if divergences:
        _LOGGER.warning("episodes ended on power-flow divergence", extra={"algorithm": algorithm, "count": divergences})
    report = ScoreReport(
        algorithm=algorithm,
        n_eval=n_eval,
        t_end=t_end,
        score=float(np.mean(totals)) if totals else 0.0,
        episode_rewards=totals,
        mean_step_seconds=float(decisions.mean()) if decisions.size else 0.0,
        divergences=divergences,
        seeds=tuple(seeds),
    )
    _LOGGER.info("score done", extra=report.to_row())
    return report


def compare(
    env_factory: EnvFactory,
    policies: List[Policy],
    *,
    n_eval: int = 100,
    t_end: int = 100,
    seed: int = 0,
    workers: int = 1,
) -> Tuple[pd.DataFrame, List[ScoreReport]]:
    """score() every policy on the same episode seeds; one row per policy."""
    reports = [score(env_factory, p, n_eval=n_eval, t_end=t_end, seed=seed, workers=workers) for p in policies]
    return pd.DataFrame([r.to_row() for r in reports]), reports

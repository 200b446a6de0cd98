from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Protocol

import numpy as np
import pandas as pd

from moopf.env.environment import OPFEnv
from moopf.env.types import EnvState


class Policy(Protocol):
    name: str

    def __call__(self, state: EnvState, env: OPFEnv) -> np.ndarray: ...

    def fork(self, seed: int) -> "Policy": ...


@dataclass
class EpisodeTrace:
    """Per-step record of one evaluation episode."""

    rows: List[Dict[str, Any]] = field(default_factory=list)
    voltages: List[np.ndarray] = field(default_factory=list)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([r["reward"] for r in self.rows], dtype=float)

    @property
    def cumulative_reward(self) -> float:
        return float(self.rewards.sum()) if self.rows else 0.0

    @property
    def decision_seconds(self) -> np.ndarray:
        return np.array([r["decision_seconds"] for r in self.rows], dtype=float)

    @property
    def diverged(self) -> bool:
        return any(r["reason"] == "diverged" for r in self.rows)

    @property
    def steps(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)


def rollout(
    env: OPFEnv,
    policy: Policy,
    *,
    seed: Optional[int],
    horizon: int,
    on_step: Optional[Any] = None,
) -> EpisodeTrace:
    """Reset, then act until ``horizon`` steps or a terminal step (reward of that step included).

    ``on_step(t, env)`` runs before each decision; the fault study uses it to
    trip generators at the onset interval.
    """
    trace = EpisodeTrace()
    state = env.reset(seed=seed)
    for t in range(horizon):
        if on_step is not None:
            on_step(t, env)
        start = time.perf_counter()
        action = policy(state, env)
        decision = time.perf_counter() - start
        result = env.step(action)
        row: Dict[str, Any] = {"t": t, "reward": result.reward, "decision_seconds": decision}
        row.update(result.breakdown.as_row())
        row.update(
            {
                "terminal": result.terminal,
                "reason": result.reason,
                "gate_passed": result.gate_passed,
                "in_bounds": bool(result.solution is not None and result.solution.converged and env.voltages_in_bounds(result.solution)),
            }
        )
        trace.rows.append(row)
        if result.solution is not None and result.solution.converged:
            trace.voltages.append(np.abs(result.solution.v))
        if result.terminal:
            break
        state = result.state
    return trace

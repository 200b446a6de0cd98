from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from moopf.astgcn.segments import SegmentSet
from moopf.env.rewards import RewardBreakdown
from moopf.powerflow import PowerFlowSolution

TerminalReason = Literal["", "gate", "horizon", "diverged"]


@dataclass(frozen=True)
class EnvState:
    """Observation at interval ``t``: raw node features plus the segment stacks.

    The graph embedding is produced by the agent's extractor from ``segments``;
    ``vector`` appends it to the flattened features.
    """

    t: int
    X: np.ndarray  # N x F, raw
    segments: Optional[SegmentSet] = None

    @property
    def features(self) -> np.ndarray:
        return self.X.reshape(-1)

    @property
    def width(self) -> int:
        return int(self.X.size)

    def vector(self, embedding: Optional[np.ndarray] = None) -> np.ndarray:
        if embedding is None:
            return self.features.copy()
        return np.concatenate([self.features, np.asarray(embedding, dtype=float).reshape(-1)])


@dataclass(frozen=True)
class Transition:
    state: EnvState
    action: np.ndarray
    reward: float
    breakdown: RewardBreakdown
    next_state: EnvState
    terminal: bool


@dataclass(frozen=True)
class StepResult:
    state: EnvState
    reward: float
    breakdown: RewardBreakdown
    terminal: bool
    reason: TerminalReason = ""
    gate_passed: bool = True
    solution: Optional[PowerFlowSolution] = None
    seconds: float = 0.0

    @property
    def diverged(self) -> bool:
        return self.reason == "diverged"

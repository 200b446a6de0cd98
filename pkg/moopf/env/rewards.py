"""The eight-part reward stack.

Component order (index 0..7): generation cost, line-loss ratio, thermal
headroom, voltage fluctuation, then active-power, reactive-power and voltage
bound violations, and the renewable share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from moopf.config import RewardSection
from moopf.economics.costs import CostBreakdown
from moopf.economics.fluctuation import VoltageHistory, voltage_fluctuation
from moopf.errors import ConvergenceError, ShapeError
from moopf.grid.types import GridCase
from moopf.powerflow import PowerFlowSolution

N_COMPONENTS = 8
COMPONENT_NAMES = ("r1", "r2", "r3", "r4", "r5", "r6", "r7", "r8")


@dataclass(frozen=True)
class RewardWeights:
    w: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.w) != N_COMPONENTS:
            raise ShapeError(f"need {N_COMPONENTS} reward weights, got {len(self.w)}")
        if not all(math.isfinite(x) for x in self.w):
            raise ShapeError("reward weights must be finite")

    @classmethod
    def from_config(cls, section: RewardSection, c_norm: float) -> "RewardWeights":
        """Explicit ``weights`` win; otherwise (cost_weight / C_norm, 1, 1, w4, 2, 2, 2, 1)."""
        if section.weights is not None:
            return cls(tuple(float(x) for x in section.weights))
        norm = c_norm if c_norm > 0.0 else 1.0
        return cls((section.cost_weight / norm, 1.0, 1.0, section.w4, 2.0, 2.0, 2.0, 1.0))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.w, dtype=float)

    @property
    def w4(self) -> float:
        return self.w[3]


@dataclass(frozen=True)
class RewardBreakdown:
    components: np.ndarray = field(default_factory=lambda: np.zeros(N_COMPONENTS))
    divergence_penalty: float = 0.0

    def total(self, weights: RewardWeights) -> float:
        return float(weights.as_array() @ self.components) + self.divergence_penalty

    @classmethod
    def diverged(cls, penalty: float) -> "RewardBreakdown":
        return cls(components=np.zeros(N_COMPONENTS), divergence_penalty=float(penalty))

    def as_row(self) -> dict[str, float]:
        row = {name: float(v) for name, v in zip(COMPONENT_NAMES, self.components)}
        row["divergence_penalty"] = self.divergence_penalty
        return row


def _violation(x: float, lo: float, hi: float) -> float:
    """Non-positive score for one quantity outside [lo, hi]; 0 inside."""
    span = max(hi - lo, 1e-9)
    if x > hi:
        return 1.0 - x / hi if hi > 0.0 else -(x - hi) / span
    if x < lo:
        if lo > 0.0 and x > 0.0:
            return 1.0 - lo / x
        if lo < 0.0:
            return 1.0 - x / lo
        return -(lo - x) / span
    return 0.0


def bound_violation(values: Sequence[float], lo: Sequence[float], hi: Sequence[float]) -> float:
    """Mean violation score over all entries (violators contribute, others count as 0)."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        return 0.0
    total = sum(_violation(float(x), float(a), float(b)) for x, a, b in zip(vals, lo, hi))
    return total / vals.size


def reward_components(
    case: GridCase,
    solution: PowerFlowSolution,
    dispatch: Sequence[float] | np.ndarray,
    costs: CostBreakdown,
    history: VoltageHistory,
    *,
    line_loss_rate: float = 0.05,
    thermal_epsilon: float = 1e-6,
    literal_penalty_indexing: bool = False,
) -> np.ndarray:
    """r1..r8 for one solved interval.

    ``dispatch`` is MW per generator as actually applied (slack output from the
    solution, tripped units at 0). The renewable share reads the output the
    solve delivered, which is below the schedule when availability caps it.
    The history must not yet contain the current interval's voltages.
    """
    if not solution.converged:
        raise ConvergenceError("reward components need a converged solution")
    p = np.asarray(dispatch, dtype=float)
    if p.shape != (case.n_generators,):
        raise ShapeError(f"dispatch has {p.size} entries, case has {case.n_generators} generators")
    gens = case.generators
    vmag = np.abs(solution.v)

    r1 = -costs.total
    p_sum = max(float(p.sum()), 1e-9)
    r2 = -(solution.loss_total / p_sum) / line_loss_rate
    limits = np.array([br.i_thermal for br in case.branches])
    if limits.size:
        r3 = 1.0 - float(np.mean(np.minimum(solution.branch_current / (limits + thermal_epsilon), 1.0)))
    else:
        r3 = 1.0
    r4 = -voltage_fluctuation(history, vmag)

    raw5 = bound_violation(p, [g.p_min for g in gens], [g.p_max for g in gens])
    raw6 = bound_violation(solution.q_gen, [g.q_min for g in gens], [g.q_max for g in gens])
    raw7 = bound_violation(vmag, [b.v_min for b in case.buses], [b.v_max for b in case.buses])
    if literal_penalty_indexing:
        r5, r6, r7 = math.expm1(r4), math.expm1(raw5), math.expm1(raw6)
    else:
        r5, r6, r7 = math.expm1(raw5), math.expm1(raw6), math.expm1(raw7)

    rer = [k for k, g in enumerate(gens) if g.is_renewable]
    cap = sum(gens[k].p_max for k in rer)
    delivered = np.asarray(solution.p_gen, dtype=float)
    r8 = float(np.clip(sum(max(delivered[k], 0.0) for k in rer) / cap, 0.0, 1.0)) if cap > 0.0 else 0.0

    return np.array([r1, r2, r3, r4, r5, r6, r7, r8], dtype=float)


def early_stop_check(cumulative: float, threshold: Optional[float]) -> bool:
    if threshold is None or (math.isinf(threshold) and threshold > 0):
        return False
    return cumulative > threshold

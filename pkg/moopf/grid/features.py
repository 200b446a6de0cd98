from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from moopf.constants import NODE_BASE_FEATURES
from moopf.errors import ConvergenceError
from moopf.grid.types import GridCase
from moopf.powerflow import PowerFlowSolution, _calc_injection


@dataclass(frozen=True)
class GraphSnapshot:
    time_index: int
    X: np.ndarray  # N x F, read-only


def feature_width(case: GridCase) -> int:
    return NODE_BASE_FEATURES + case.max_degree


def snapshot(case: GridCase, solution: PowerFlowSolution, t: int) -> GraphSnapshot:
    """Node feature matrix: P, Q, |V|, angle, then |S| of incident branches by neighbor id."""
    if not solution.converged:
        raise ConvergenceError(f"snapshot at t={t} needs a converged solution")
    n = case.n_buses
    X = np.zeros((n, feature_width(case)))
    s = _calc_injection(case, solution.v)
    vmag = np.abs(solution.v)
    X[:, 0] = s.real
    X[:, 1] = s.imag
    X[:, 2] = vmag
    X[:, 3] = np.angle(solution.v)
    for pos, row in enumerate(case.neighbors):
        for slot, (_, b) in enumerate(row):
            X[pos, NODE_BASE_FEATURES + slot] = vmag[pos] * solution.branch_current[b]
    X.setflags(write=False)
    return GraphSnapshot(time_index=int(t), X=X)

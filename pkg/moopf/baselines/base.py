from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from moopf.errors import MoopfError

LOWER, UPPER = -1.0, 1.0

Objective = Callable[[np.ndarray], float]


class BudgetExhausted(Exception):
    """Raised by the counted objective once the evaluation budget is spent."""


@dataclass
class SearchResult:
    best: np.ndarray
    fitness: float
    evaluations: int
    history: List[float] = field(default_factory=list)  # incumbent after each iteration


class CountedObjective:
    """Clips candidates into the box, counts calls, keeps the best seen (maximization)."""

    def __init__(self, fn: Objective, dim: int, budget: int) -> None:
        if budget < 1:
            raise MoopfError("optimizer budget must be >= 1 evaluation")
        self.fn = fn
        self.dim = int(dim)
        self.budget = int(budget)
        self.calls = 0
        self.best: Optional[np.ndarray] = None
        self.best_fitness = -np.inf

    @property
    def exhausted(self) -> bool:
        return self.calls >= self.budget

    def __call__(self, x: np.ndarray) -> float:
        if self.exhausted:
            raise BudgetExhausted
        cand = np.clip(np.asarray(x, dtype=float).reshape(self.dim), LOWER, UPPER)
        self.calls += 1
        value = float(self.fn(cand))
        if not np.isfinite(value):
            value = -np.inf
        if self.best is None or value > self.best_fitness:
            self.best = cand.copy()
            self.best_fitness = value
        return value

    def result(self, history: List[float]) -> SearchResult:
        assert self.best is not None
        return SearchResult(best=self.best, fitness=self.best_fitness, evaluations=self.calls, history=history)


def initial_population(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    return rng.uniform(LOWER, UPPER, size=(size, dim))


def planned_iterations(budget: int, population: int) -> int:
    """Iterations the budget affords after the initial population, at least one."""
    return max(1, (budget - population) // max(population, 1))

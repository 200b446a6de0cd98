from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np

from moopf.baselines.base import (
    LOWER,
    UPPER,
    BudgetExhausted,
    CountedObjective,
    Objective,
    SearchResult,
    initial_population,
    planned_iterations,
)

_LOGGER = logging.getLogger(__name__)


def _update_leaders(leaders: List[Tuple[float, np.ndarray]], position: np.ndarray, value: float) -> None:
    """Keep the three best positions seen so far, best first."""
    leaders.append((value, position.copy()))
    leaders.sort(key=lambda item: item[0], reverse=True)
    del leaders[3:]


def gwo_step_optimize(
    objective: Objective,
    dim: int,
    budget: int,
    *,
    rng: np.random.Generator,
    population: int = 30,
) -> SearchResult:
    """Grey wolf search over [-1, 1]^dim, maximizing the objective.

    Each wolf moves to the mean of three pulls toward alpha, beta and delta;
    the coefficient ``a`` falls linearly from 2 to 0 over the planned
    iterations. A pack of one lets the single wolf lead itself.
    """
    obj = CountedObjective(objective, dim, budget)
    size = min(int(population), int(budget))
    wolves = initial_population(rng, size, dim)
    leaders: List[Tuple[float, np.ndarray]] = []
    history: list[float] = []
    iterations = planned_iterations(budget, size)

    try:
        for i in range(size):
            _update_leaders(leaders, wolves[i], obj(wolves[i]))
        history.append(obj.best_fitness)
        t = 0
        while not obj.exhausted:
            a = 2.0 * max(0.0, 1.0 - t / iterations)
            guides = [leaders[min(k, len(leaders) - 1)][1] for k in range(3)]
            for i in range(size):
                pulls = []
                for leader in guides:
                    A = 2.0 * a * rng.random(dim) - a
                    C = 2.0 * rng.random(dim)
                    pulls.append(leader - A * np.abs(C * leader - wolves[i]))
                wolves[i] = np.clip(np.mean(pulls, axis=0), LOWER, UPPER)
                _update_leaders(leaders, wolves[i], obj(wolves[i]))
            t += 1
            history.append(obj.best_fitness)
    except BudgetExhausted:
        history.append(obj.best_fitness)

    _LOGGER.debug("gwo done", extra={"evaluations": obj.calls, "fitness": obj.best_fitness})
    return obj.result(history)

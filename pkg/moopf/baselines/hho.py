"""Harris hawks search over the box [-1, 1]^dim, maximizing the objective.

Phases per hawk, picked from the prey's escaping energy E and a uniform draw r:
perching exploration (|E| >= 1), soft besiege, hard besiege, and the two
besiege variants with progressive rapid dives that fall back on a Lévy jump.
"""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from scipy.special import gamma

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


def levy_flight(rng: np.random.Generator, dim: int, beta: float = 1.5) -> np.ndarray:
    """Mantegna step with stability index ``beta``."""
    sigma = (
        gamma(1 + beta) * math.sin(math.pi * beta / 2) / (gamma((1 + beta) / 2) * beta * 2 ** ((beta - 1) / 2))
    ) ** (1 / beta)
    u = rng.normal(0.0, sigma, dim)
    v = rng.normal(0.0, 1.0, dim)
    return 0.01 * u / np.abs(v) ** (1 / beta)


def _dive(
    obj: CountedObjective,
    rng: np.random.Generator,
    current_fitness: float,
    y: np.ndarray,
    beta: float,
) -> tuple[Optional[np.ndarray], float]:
    """Try Y, then Z = Y + S * Levy; return the first that beats the hawk, else (None, fitness)."""
    y = np.clip(y, LOWER, UPPER)
    fy = obj(y)
    if fy > current_fitness:
        return y, fy
    z = np.clip(y + rng.uniform(0.0, 1.0, y.shape) * levy_flight(rng, y.shape[0], beta), LOWER, UPPER)
    fz = obj(z)
    if fz > current_fitness:
        return z, fz
    return None, current_fitness


def hho_step_optimize(
    objective: Objective,
    dim: int,
    budget: int,
    *,
    rng: np.random.Generator,
    population: int = 30,
    beta: float = 1.5,
) -> SearchResult:
    obj = CountedObjective(objective, dim, budget)
    size = min(int(population), int(budget))
    hawks = initial_population(rng, size, dim)
    fitness = np.full(size, -np.inf)
    history: list[float] = []
    iterations = planned_iterations(budget, size)

    try:
        for i in range(size):
            fitness[i] = obj(hawks[i])
        history.append(obj.best_fitness)
        t = 0
        while not obj.exhausted:
            prey = obj.best.copy()  # type: ignore[union-attr]
            decay = 2.0 * max(0.0, 1.0 - t / iterations)
            for i in range(size):
                energy = decay * (2.0 * rng.random() - 1.0)
                if abs(energy) >= 1.0:
                    if rng.random() >= 0.5:
                        other = hawks[rng.integers(size)]
                        new = other - rng.random() * np.abs(other - 2.0 * rng.random() * hawks[i])
                    else:
                        new = (prey - hawks.mean(axis=0)) - rng.random() * (LOWER + rng.random() * (UPPER - LOWER))
                    new = np.clip(new, LOWER, UPPER)
                    hawks[i], fitness[i] = new, obj(new)
                    continue

                r = rng.random()
                jump = 2.0 * (1.0 - rng.random())
                if r >= 0.5 and abs(energy) >= 0.5:
                    new = (prey - hawks[i]) - energy * np.abs(jump * prey - hawks[i])
                elif r >= 0.5:
                    new = prey - energy * np.abs(prey - hawks[i])
                else:
                    anchor = hawks[i] if abs(energy) >= 0.5 else hawks.mean(axis=0)
                    y = prey - energy * np.abs(jump * prey - anchor)
                    moved, value = _dive(obj, rng, fitness[i], y, beta)
                    if moved is not None:
                        hawks[i], fitness[i] = moved, value
                    continue
                new = np.clip(new, LOWER, UPPER)
                hawks[i], fitness[i] = new, obj(new)
            t += 1
            history.append(obj.best_fitness)
    except BudgetExhausted:
        history.append(obj.best_fitness)

    _LOGGER.debug("hho done", extra={"evaluations": obj.calls, "fitness": obj.best_fitness})
    return obj.result(history)

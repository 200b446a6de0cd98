"""Metaheuristic baselines that search the action space one step at a time."""

from moopf.baselines.base import BudgetExhausted, CountedObjective, SearchResult, initial_population
from moopf.baselines.gwo import gwo_step_optimize
from moopf.baselines.hho import hho_step_optimize, levy_flight
from moopf.baselines.policy import (
    OPTIMIZERS,
    HeuristicPolicy,
    RandomPolicy,
    random_policy,
    run_heuristic_policy,
)

__all__ = [
    "BudgetExhausted",
    "CountedObjective",
    "SearchResult",
    "initial_population",
    "gwo_step_optimize",
    "hho_step_optimize",
    "levy_flight",
    "OPTIMIZERS",
    "HeuristicPolicy",
    "RandomPolicy",
    "random_policy",
    "run_heuristic_policy",
]

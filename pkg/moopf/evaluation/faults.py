"""Generator-trip stability study: intervals until every bus voltage is back in bounds."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from moopf.env.environment import OPFEnv
from moopf.env.rollout import Policy, rollout
from moopf.errors import MoopfError
from moopf.seed import derive_seed

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class FaultScenario:
    nodes: Tuple[int, ...]  # bus ids whose generator trips
    onset: int
    recovery_window: int = 2
    response_time: Optional[int] = None  # intervals; None while unmeasured or unrecovered
    recovered: bool = False
    wall_seconds: float = 0.0

    @property
    def count(self) -> int:
        return len(self.nodes)


def response_time(in_bounds: Sequence[bool], window: int) -> Optional[int]:
    """1-based index of the first post-onset interval that starts ``window`` in-bound intervals in a row."""
    run = 0
    for k, ok in enumerate(in_bounds):
        run = run + 1 if ok else 0
        if run >= window:
            return k - window + 2
    return None


def tripable_buses(env: OPFEnv) -> List[int]:
    """Bus ids carrying a generator other than the slack unit."""
    slack_bus = env.case.buses[env.case.slack_index].id
    return [g.bus for g in env.case.generators if g.bus != slack_bus]


def run_fault_scenario(
    env: OPFEnv,
    policy: Policy,
    scenario: FaultScenario,
    *,
    horizon: int,
    seed: int,
) -> FaultScenario:
    if not scenario.nodes:
        return FaultScenario(scenario.nodes, scenario.onset, scenario.recovery_window, 0, True)
    if scenario.onset >= horizon:
        raise MoopfError(f"fault onset {scenario.onset} is past the episode horizon {horizon}")
    indices = [env.generator_at(bus) for bus in scenario.nodes]

    def trip(t: int, live: OPFEnv) -> None:
        if t == scenario.onset:
            live.inject_fault(indices)

    trace = rollout(env, policy, seed=seed, horizon=horizon, on_step=trip)
    post = [bool(row["in_bounds"]) for row in trace.rows if row["t"] >= scenario.onset]
    rt = response_time(post, scenario.recovery_window)
    env.clear_faults()
    return FaultScenario(
        nodes=scenario.nodes,
        onset=scenario.onset,
        recovery_window=scenario.recovery_window,
        response_time=rt,
        recovered=rt is not None,
        wall_seconds=float(trace.decision_seconds.sum()),
    )


def sample_scenarios(
    env: OPFEnv, counts: Sequence[int], per_count: int, *, onset: int, recovery_window: int, seed: int
) -> List[FaultScenario]:
    buses = tripable_buses(env)
    out: List[FaultScenario] = []
    for count in counts:
        if count > len(buses):
            _LOGGER.warning("not enough generator buses for fault count", extra={"count": count, "available": len(buses)})
            continue
        rng = np.random.default_rng(derive_seed(seed, "faults", f"count={count}"))
        for _ in range(per_count if count else 1):
            picked = tuple(int(b) for b in rng.choice(buses, size=count, replace=False)) if count else ()
            out.append(FaultScenario(picked, onset, recovery_window))
    return out


def fault_study(
    env_factory: Callable[[], OPFEnv],
    policy: Policy,
    scenarios: Sequence[FaultScenario],
    *,
    horizon: int,
    seed: int = 0,
) -> Tuple[pd.DataFrame, List[FaultScenario]]:
    """Measure every scenario, then mean ± std of the response time per fault count.

    Unrecovered scenarios are counted separately and left out of the mean.
    """
    measured: List[FaultScenario] = []
    for n, scenario in enumerate(scenarios):
        ep_seed = derive_seed(seed, "fault-episode", f"n={n}")
        result = run_fault_scenario(env_factory(), policy.fork(ep_seed), scenario, horizon=horizon, seed=ep_seed)
        measured.append(result)
        _LOGGER.debug(
            "fault scenario done",
            extra={"nodes": list(result.nodes), "response_time": result.response_time, "recovered": result.recovered},
        )

    rows = []
    for count in sorted({s.count for s in measured}):
        group = [s for s in measured if s.count == count]
        times = np.array([s.response_time for s in group if s.recovered], dtype=float)
        rows.append(
            {
                "fault_count": count,
                "scenarios": len(group),
                "recovered": int(times.size),
                "unrecovered": len(group) - int(times.size),
                "mean_response": float(times.mean()) if times.size else float("nan"),
                "std_response": float(times.std()) if times.size else float("nan"),
                "mean_wall_seconds": float(np.mean([s.wall_seconds for s in group])),
            }
        )
    return pd.DataFrame(rows), measured


def scenarios_frame(scenarios: Sequence[FaultScenario]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "nodes": " ".join(str(b) for b in s.nodes),
                "fault_count": s.count,
                "onset": s.onset,
                "response_time": s.response_time,
                "recovered": s.recovered,
                "wall_seconds": s.wall_seconds,
            }
            for s in scenarios
        ]
    )

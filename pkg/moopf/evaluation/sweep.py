from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from moopf.agent.ddpg import DDPGAgent
from moopf.agent.training import TrainingLog, train
from moopf.config import RunConfig
from moopf.env.environment import OPFEnv
from moopf.env.rollout import rollout
from moopf.errors import MoopfError
from moopf.evaluation.score import score
from moopf.grid.types import GridCase
from moopf.seed import derive_seed

_LOGGER = logging.getLogger(__name__)

Trainer = Callable[..., Tuple[DDPGAgent, TrainingLog]]


def with_w4(config: RunConfig, w4: float) -> RunConfig:
    """Copy of ``config`` paying ``w4`` on the voltage-fluctuation term."""
    rewards = config.rewards
    if rewards.weights is not None:
        weights = list(rewards.weights)
        weights[3] = float(w4)
        rewards = rewards.model_copy(update={"weights": weights})
    else:
        rewards = rewards.model_copy(update={"w4": float(w4)})
    return config.model_copy(update={"rewards": rewards})


def monitored_bus(case: GridCase, requested: Optional[int] = None) -> int:
    """Requested bus, else the first renewable bus, else the far end of the feeder."""
    if requested is not None:
        if requested not in case.index_of:
            raise MoopfError(f"monitored bus {requested} is not in case {case.name}")
        return int(requested)
    for gen in case.generators:
        if gen.is_renewable:
            return gen.bus
    return case.bfs_order()[-1]


@dataclass
class SweepResult:
    table: pd.DataFrame  # one row per w4
    traces: pd.DataFrame  # w4, t, bus, vmag for every bus; the table names the monitored one


def weight_sweep(
    case: GridCase,
    config: RunConfig,
    *,
    grid: Optional[Sequence[float]] = None,
    seed: int = 0,
    episodes: Optional[int] = None,
    n_eval: Optional[int] = None,
    t_end: Optional[int] = None,
    workers: int = 1,
    trainer: Trainer = train,
) -> SweepResult:
    """Train and score one agent per w4 value, on fixed seeds per cell."""
    ev = config.evaluation
    values = list(grid if grid is not None else ev.weight_grid)
    n_eval = ev.episodes if n_eval is None else n_eval
    t_end = ev.horizon if t_end is None else t_end
    bus = monitored_bus(case, ev.monitored_bus)
    pos = case.bus_index(bus)

    rows = []
    traces = []
    for w4 in values:
        cfg = with_w4(config, w4)
        env = OPFEnv(case, cfg)
        agent, log = trainer(env, cfg, seed=derive_seed(seed, "sweep-train"), episodes=episodes)
        policy = agent.policy()
        report = score(
            lambda: OPFEnv(case, cfg), policy, n_eval=n_eval, t_end=t_end, seed=seed, workers=workers, name=f"w4={w4:g}"
        )
        trace = rollout(OPFEnv(case, cfg), policy, seed=derive_seed(seed, "sweep-trace"), horizon=t_end)
        volts = np.array([np.asarray(v, dtype=float) for v in trace.voltages]).reshape(-1, case.n_buses)
        vmag = volts[:, pos]
        rows.append(
            {
                "w4": float(w4),
                "score": report.score,
                "std": report.std,
                "divergences": report.divergences,
                "train_episodes": len(log),
                "monitored_bus": bus,
                "voltage_std": float(vmag.std()) if vmag.size else float("nan"),
            }
        )
        traces.extend(
            {"w4": float(w4), "t": t, "bus": b.id, "vmag": float(row[i])}
            for t, row in enumerate(volts)
            for i, b in enumerate(case.buses)
        )
        _LOGGER.info("sweep cell done", extra=rows[-1])
    return SweepResult(table=pd.DataFrame(rows), traces=pd.DataFrame(traces, columns=["w4", "t", "bus", "vmag"]))

from __future__ import annotations

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from moopf.agent.training import TrainingLog, train
from moopf.config import RunConfig
from moopf.env.environment import OPFEnv
from moopf.evaluation.sweep import Trainer
from moopf.grid.types import GridCase
from moopf.seed import derive_seed

_LOGGER = logging.getLogger(__name__)

ATTENTION_MODES = ("st", "cosine", "jaccard", "uniform")


def with_attention_mode(config: RunConfig, mode: str) -> RunConfig:
    astgcn = config.astgcn.model_copy(update={"attention_mode": mode, "enabled": True})
    return config.model_copy(update={"astgcn": astgcn})


def default_threshold(logs: Sequence[TrainingLog]) -> float:
    """Mean reward of the last tenth of episodes, pooled over every run."""
    tails = []
    for log in logs:
        rewards = log.rewards
        if rewards.size:
            tails.append(rewards[-max(1, rewards.size // 10):])
    return float(np.mean(np.concatenate(tails))) if tails else 0.0


def attention_ablation(
    case: GridCase,
    config: RunConfig,
    *,
    modes: Sequence[str] = ("st", "cosine"),
    seed: int = 0,
    seeds: Optional[int] = None,
    episodes: Optional[int] = None,
    threshold: Optional[float] = None,
    trainer: Trainer = train,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Episodes-to-threshold per attention mode, median over training seeds.

    Returns (per-run rows, per-mode summary). Runs that never reach the
    threshold count as ``episodes + 1`` in the median and are reported.
    """
    n_seeds = config.evaluation.ablation_seeds if seeds is None else int(seeds)
    threshold = config.evaluation.ablation_threshold if threshold is None else threshold
    runs = []
    for mode in modes:
        cfg = with_attention_mode(config, mode)
        for s in range(n_seeds):
            env = OPFEnv(case, cfg)
            _, log = trainer(env, cfg, seed=derive_seed(seed, "ablation", f"seed={s}"), episodes=episodes)
            runs.append((mode, s, log))
            _LOGGER.info("ablation run done", extra={"mode": mode, "seed_index": s, "episodes": len(log)})

    if threshold is None:
        threshold = default_threshold([log for _, _, log in runs])

    rows = []
    for mode, s, log in runs:
        hit = log.episodes_to_threshold(threshold)
        rows.append(
            {
                "attention_mode": mode,
                "seed_index": s,
                "threshold": threshold,
                "episodes_trained": len(log),
                "episodes_to_threshold": hit if hit is not None else len(log) + 1,
                "reached": hit is not None,
            }
        )
    frame = pd.DataFrame(rows)
    summary = (
        frame.groupby("attention_mode", sort=False)
        .agg(
            median_episodes=("episodes_to_threshold", "median"),
            reached=("reached", "sum"),
            runs=("reached", "size"),
        )
        .reset_index()
    )
    summary["threshold"] = threshold
    return frame, summary

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from moopf.agent.checkpoint import load_checkpoint
from moopf.astgcn.model import MGASTGCN
from moopf.config import RunConfig
from moopf.env.environment import OPFEnv
from moopf.env.rollout import Policy
from moopf.errors import CheckpointError, MoopfError

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttentionExport:
    spatial: np.ndarray  # N x N, mean S' over the window
    temporal: np.ndarray  # T_r x T_r, mean E' of the recent segment
    steps: int

    def spatial_frame(self, bus_ids) -> pd.DataFrame:
        return pd.DataFrame(self.spatial, index=pd.Index(list(bus_ids), name="bus"), columns=[str(b) for b in bus_ids]).reset_index()

    def temporal_frame(self) -> pd.DataFrame:
        t = self.temporal.shape[0]
        lags = [f"lag{t - 1 - k}" for k in range(t)]
        return pd.DataFrame(self.temporal, index=pd.Index(lags, name="lag"), columns=lags).reset_index()


def mean_attention(
    extractor: MGASTGCN,
    env: OPFEnv,
    policy: Policy,
    *,
    window: int,
    seed: Optional[int] = None,
) -> AttentionExport:
    """Average the attention maps over the states of the first ``window`` steps."""
    if window < 1:
        raise MoopfError("attention window must be >= 1")
    state = env.reset(seed=seed)
    spatial, temporal = [], []
    for _ in range(window):
        if state.segments is None:
            raise MoopfError("environment carries no segment stacks")
        maps = extractor.attention_maps(state.segments)
        spatial.append(maps["spatial"])
        temporal.append(maps["temporal"])
        result = env.step(policy(state, env))
        if result.terminal:
            break
        state = result.state
    return AttentionExport(spatial=np.mean(spatial, axis=0), temporal=np.mean(temporal, axis=0), steps=len(spatial))


def export_attention(
    checkpoint: str | Path,
    env: OPFEnv,
    config: RunConfig,
    *,
    window: Optional[int] = None,
    seed: Optional[int] = None,
) -> AttentionExport:
    agent = load_checkpoint(checkpoint, env, config)
    if agent.extractor is None:
        raise CheckpointError("checkpoint has no graph extractor to read attention from")
    steps = config.evaluation.attention_window if window is None else int(window)
    export = mean_attention(agent.extractor, env, agent.policy(), window=steps, seed=seed)
    _LOGGER.info("attention exported", extra={"steps": export.steps, "nodes": export.spatial.shape[0]})
    return export

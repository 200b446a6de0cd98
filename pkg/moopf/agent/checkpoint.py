"""Versioned agent checkpoints (``torch.save`` of a plain dict).

Layout: ``format_version``, ``case``, ``state_width``, ``feature_width``,
``action_dim``, ``hidden``, ``astgcn`` (config dump or None) and one state dict
per network (actor, critic, their targets, extractor and its target when
attached).
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict

import torch

from moopf.agent.ddpg import DDPGAgent
from moopf.astgcn.segments import SegmentConfig
from moopf.config import RunConfig
from moopf.constants import CHECKPOINT_FORMAT_VERSION
from moopf.errors import CheckpointError, MoopfError

_LOGGER = logging.getLogger(__name__)


def save_checkpoint(agent: DDPGAgent, path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload: Dict[str, Any] = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "case": agent.case_name,
        "state_width": agent.state_width,
        "feature_width": agent.feature_width,
        "action_dim": agent.action_dim,
        "hidden": list(agent.config.ddpg.hidden),
        "astgcn": agent.config.astgcn.model_dump(mode="json") if agent.extractor is not None else None,
        "networks": {name: net.state_dict() for name, net in agent.networks().items()},
    }
    torch.save(payload, out)
    _LOGGER.info("checkpoint saved", extra={"path": str(out), "case": agent.case_name})
    return out


def read_checkpoint(path: str | Path) -> Dict[str, Any]:
    p = Path(path)
    if not p.exists():
        raise CheckpointError(f"checkpoint not found: {p}")
    try:
        payload = torch.load(p, map_location="cpu", weights_only=True)
    except Exception as exc:  # torch raises a mix of pickle/runtime errors
        raise CheckpointError(f"{p}: unreadable checkpoint: {exc}") from exc
    if not isinstance(payload, dict):
        raise CheckpointError(f"{p}: checkpoint payload is not a mapping")
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"{p}: unsupported checkpoint format {version!r}")
    return payload


def checkpoint_config(payload: Dict[str, Any], config: RunConfig) -> RunConfig:
    """``config`` with the extractor and hidden sizes the checkpoint was trained with."""
    if payload["astgcn"] is not None:
        config = config.model_copy(update={"astgcn": config.astgcn.model_validate(payload["astgcn"])})
    elif config.astgcn.enabled:
        config = config.model_copy(update={"astgcn": config.astgcn.model_copy(update={"enabled": False})})
    return config.model_copy(update={"ddpg": config.ddpg.model_copy(update={"hidden": list(payload["hidden"])})})


def load_checkpoint(path: str | Path, env, config: RunConfig) -> DDPGAgent:
    """Rebuild an agent for ``env`` and restore its weights; widths must match."""
    payload = read_checkpoint(path)
    if payload["case"] != env.case.name:
        raise CheckpointError(f"checkpoint is for case {payload['case']!r}, env runs {env.case.name!r}")
    config = checkpoint_config(payload, config)
    if config.astgcn.enabled:
        wanted = SegmentConfig.from_config(config.astgcn, env.config.env).lengths
        have = env.segment_config.lengths if env.segment_config is not None else None
        if have != wanted:
            raise CheckpointError(f"checkpoint segment lengths {wanted} vs environment {have}")
    if payload["action_dim"] != env.action_dim or payload["feature_width"] != env.state_width:
        raise CheckpointError(
            "checkpoint widths do not match the environment "
            f"(action {payload['action_dim']} vs {env.action_dim}, features {payload['feature_width']} vs {env.state_width})"
        )
    try:
        agent = DDPGAgent(env, config)
    except MoopfError as exc:
        raise CheckpointError(f"checkpoint does not fit the environment: {exc}") from exc
    if agent.state_width != payload["state_width"]:
        raise CheckpointError(f"state width {agent.state_width} vs checkpoint {payload['state_width']}")
    nets = agent.networks()
    stored = payload["networks"]
    if set(stored) != set(nets):
        raise CheckpointError(f"checkpoint networks {sorted(stored)} vs agent {sorted(nets)}")
    for name, net in nets.items():
        try:
            net.load_state_dict(stored[name])
        except RuntimeError as exc:
            raise CheckpointError(f"{name}: {exc}") from exc
    return agent

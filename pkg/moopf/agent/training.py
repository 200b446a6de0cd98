from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np
import pandas as pd

from moopf.agent.ddpg import DDPGAgent
from moopf.agent.noise import decayed_sigma
from moopf.config import RunConfig, resolve_seed
from moopf.env.environment import OPFEnv
from moopf.env.rewards import early_stop_check
from moopf.env.types import Transition
from moopf.seed import derive_seed
from moopf.telemetry import timed

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    steps: int
    cumulative_reward: float
    critic_loss: float
    actor_loss: float
    reason: str
    seconds: float


@dataclass
class TrainingLog:
    records: List[EpisodeRecord] = field(default_factory=list)

    def append(self, record: EpisodeRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([r.cumulative_reward for r in self.records], dtype=float)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.records], columns=list(EpisodeRecord.__dataclass_fields__))

    def write_csv(self, path: str | Path) -> Path:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(out, index=False, float_format="%.17g")
        return out

    def episodes_to_threshold(self, threshold: float) -> Optional[int]:
        """1-based index of the first episode whose cumulative reward reaches ``threshold``."""
        for rec in self.records:
            if rec.cumulative_reward >= threshold:
                return rec.episode + 1
        return None


def discounted_returns(rewards: np.ndarray | list[float], gamma: float) -> np.ndarray:
    """G_t = r_t + gamma * G_{t+1}, computed backwards."""
    r = np.asarray(rewards, dtype=float)
    out = np.zeros_like(r)
    running = 0.0
    for t in range(len(r) - 1, -1, -1):
        running = r[t] + gamma * running
        out[t] = running
    return out


def train(
    env: OPFEnv,
    config: RunConfig,
    *,
    seed: Optional[int] = None,
    agent: Optional[DDPGAgent] = None,
    episodes: Optional[int] = None,
    on_episode: Optional[Callable[[EpisodeRecord], None]] = None,
) -> tuple[DDPGAgent, TrainingLog]:
    """Actor-critic training loop over ``episodes`` environment episodes.

    Per step: act with exploration noise, step the env, store the transition
    (terminal on gate failure or horizon), update once the buffer holds a batch,
    then break on a failed gate or when the cumulative reward passes the
    early-stop threshold.
    """
    base = resolve_seed(config) if seed is None else int(seed)
    dd = config.ddpg
    total = dd.episodes if episodes is None else int(episodes)
    agent = agent if agent is not None else DDPGAgent(env, config, seed=derive_seed(base, "agent"))
    log = TrainingLog()
    started = time.perf_counter()
    skipped = 0

    for n in range(total):
        if dd.time_budget_seconds is not None and time.perf_counter() - started > dd.time_budget_seconds:
            _LOGGER.info("training time budget exhausted", extra={"episode": n, "budget": dd.time_budget_seconds})
            break
        with timed("train.episode", {"episode": n}) as tm:
            state = env.reset(seed=derive_seed(base, "train", f"episode={n}"))
            agent.noise.reset()
            agent.noise.sigma = decayed_sigma(dd.ou_sigma, dd.ou_sigma_final, n, total)
            cumulative = 0.0
            steps = 0
            reason = "horizon"
            c_losses: list[float] = []
            a_losses: list[float] = []
            while True:
                action = agent.act(state, explore=True)
                result = env.step(action)
                agent.remember(
                    Transition(
                        state=state,
                        action=action,
                        reward=result.reward,
                        breakdown=result.breakdown,
                        next_state=result.state,
                        terminal=result.terminal,
                    )
                )
                stats = agent.update()
                if stats is None:
                    skipped += 1
                else:
                    c_losses.append(stats.critic_loss)
                    a_losses.append(stats.actor_loss)
                steps += 1
                if not result.gate_passed:
                    reason = "diverged" if result.diverged else "gate"
                    break
                cumulative += result.reward
                if early_stop_check(cumulative, config.rewards.early_stop):
                    reason = "early-stop"
                    break
                if result.terminal:
                    break
                state = result.state
        record = EpisodeRecord(
            episode=n,
            steps=steps,
            cumulative_reward=cumulative,
            critic_loss=float(np.mean(c_losses)) if c_losses else math.nan,
            actor_loss=float(np.mean(a_losses)) if a_losses else math.nan,
            reason=reason,
            seconds=float(tm["seconds"]),
        )
        log.append(record)
        if on_episode is not None:
            on_episode(record)
        _LOGGER.debug("episode done", extra=asdict(record))

    if skipped:
        _LOGGER.info("updates skipped while the replay buffer filled", extra={"skipped": skipped})
    return agent, log

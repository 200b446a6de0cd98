"""Deterministic actor-critic with target networks and soft updates.

The graph extractor (when attached) is trained through the critic loss; the
actor sees its embedding detached.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np
import torch
from torch import nn

from moopf.agent.networks import DTYPE, MLP, actor_forward, build_actor, build_critic, critic_forward
from moopf.agent.noise import OUNoise
from moopf.agent.replay import ReplayBuffer
from moopf.astgcn.model import MGASTGCN
from moopf.config import RunConfig
from moopf.env.types import EnvState, Transition
from moopf.errors import MoopfError, ShapeError
from moopf.seed import derive_seed

_LOGGER = logging.getLogger(__name__)


def make_optimizer(params: Iterable[nn.Parameter], kind: str, lr: float) -> torch.optim.Optimizer:
    params = [p for p in params if p.requires_grad]
    if kind == "sgd":
        return torch.optim.SGD(params, lr=lr)
    if kind == "adam":
        return torch.optim.Adam(params, lr=lr)
    raise MoopfError(f"unknown optimizer {kind!r}")


def select_action(
    actor: MLP, noise: Optional[OUNoise], state: np.ndarray | torch.Tensor
) -> np.ndarray:
    """clip(actor(state) + noise, -1, 1)."""
    with torch.no_grad():
        action = actor_forward(actor, state).cpu().numpy()
    if noise is not None:
        action = action + noise.sample()
    return np.clip(action, -1.0, 1.0)


def critic_targets(
    rewards: torch.Tensor, next_q: torch.Tensor, terminals: torch.Tensor, gamma: float
) -> torch.Tensor:
    """r + gamma * Q'(s', pi'(s')), bootstrap masked on terminal transitions."""
    return rewards + gamma * (1.0 - terminals) * next_q


def critic_update(
    critic: MLP,
    optimizer: torch.optim.Optimizer,
    states: torch.Tensor,
    actions: torch.Tensor,
    targets: torch.Tensor,
) -> float:
    """One gradient step on the mean squared TD error; returns the pre-step loss."""
    if states.shape[0] == 0:
        raise MoopfError("critic update needs a non-empty batch")
    q = critic_forward(critic, states, actions).reshape(-1)
    loss = torch.mean((q - targets.detach().reshape(-1)) ** 2)
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    return float(loss.detach())


def actor_update(
    actor: MLP,
    critic: MLP,
    optimizer: torch.optim.Optimizer,
    states: torch.Tensor,
) -> float:
    """One ascent step on mean Q(s, pi(s)) through the critic; returns -mean Q."""
    if states.shape[0] == 0:
        raise MoopfError("actor update needs a non-empty batch")
    s = states.detach()
    loss = -critic_forward(critic, s, actor_forward(actor, s)).mean()
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    critic.zero_grad(set_to_none=True)
    return float(loss.detach())


def soft_update(target: nn.Module, online: nn.Module, rho: float) -> None:
    """theta' <- rho * theta + (1 - rho) * theta', parameter by parameter."""
    t_params = list(target.parameters())
    o_params = list(online.parameters())
    if len(t_params) != len(o_params) or any(a.shape != b.shape for a, b in zip(t_params, o_params)):
        raise ShapeError("target and online networks have different parameter shapes")
    with torch.no_grad():
        for t, o in zip(t_params, o_params):
            t.mul_(1.0 - rho).add_(o, alpha=rho)


@dataclass(frozen=True)
class UpdateStats:
    critic_loss: float
    actor_loss: float


class AgentPolicy:
    """Noise-free evaluation policy; stateless, so forks share the networks."""

    def __init__(self, agent: "DDPGAgent", name: str = "ddpg") -> None:
        self._agent = agent
        self.name = name

    def __call__(self, state: EnvState, env=None) -> np.ndarray:
        return self._agent.act(state, explore=False)

    def fork(self, seed: int) -> "AgentPolicy":
        return self


class DDPGAgent:
    def __init__(self, env, config: RunConfig, *, seed: int = 0) -> None:
        self.config = config
        dd = config.ddpg
        self.case_name = env.case.name
        self.action_dim = int(env.action_dim)
        offset, scale = env.feature_scaling()
        n_buses = env.case.n_buses
        self._offset = torch.as_tensor(np.tile(offset, n_buses), dtype=DTYPE)
        self._scale = torch.as_tensor(np.tile(scale, n_buses), dtype=DTYPE)
        self.feature_width = int(env.state_width)

        self.extractor: Optional[MGASTGCN] = None
        self.target_extractor: Optional[MGASTGCN] = None
        embedding = 0
        if config.astgcn.enabled:
            self.extractor = MGASTGCN.from_env(env, config.astgcn, seed=derive_seed(seed, "extractor"))
            self.target_extractor = copy.deepcopy(self.extractor)
            self.target_extractor.requires_grad_(False)
            embedding = config.astgcn.embedding
        self.state_width = self.feature_width + embedding

        gen = torch.Generator().manual_seed(derive_seed(seed, "networks"))
        self.actor = build_actor(self.state_width, self.action_dim, dd.hidden, generator=gen)
        self.critic = build_critic(self.state_width, self.action_dim, dd.hidden, generator=gen)
        self.target_actor = copy.deepcopy(self.actor)
        self.target_critic = copy.deepcopy(self.critic)
        self.target_actor.requires_grad_(False)
        self.target_critic.requires_grad_(False)

        critic_params: List[nn.Parameter] = list(self.critic.parameters())
        if self.extractor is not None:
            critic_params += list(self.extractor.parameters())
        self.critic_optimizer = make_optimizer(critic_params, dd.optimizer, dd.critic_lr)
        self.actor_optimizer = make_optimizer(self.actor.parameters(), dd.optimizer, dd.actor_lr)

        self.rng = np.random.default_rng(derive_seed(seed, "replay"))
        self.noise = OUNoise(
            self.action_dim,
            theta=dd.ou_theta,
            sigma=dd.ou_sigma,
            rng=np.random.default_rng(derive_seed(seed, "noise")),
        )
        self.buffer: ReplayBuffer[Transition] = ReplayBuffer(dd.buffer_capacity, self.rng)

    # ------------------------------------------------------------ encoding

    def encode(self, states: Sequence[EnvState], *, target: bool = False) -> torch.Tensor:
        """Scaled node features, with the graph embedding appended when attached."""
        feats = torch.as_tensor(np.stack([s.features for s in states]), dtype=DTYPE)
        if feats.shape[1] != self.feature_width:
            raise ShapeError(f"state width {feats.shape[1]} does not match agent width {self.feature_width}")
        feats = (feats - self._offset) * self._scale
        extractor = self.target_extractor if target else self.extractor
        if extractor is None:
            return feats
        segments = [s.segments for s in states]
        if any(seg is None for seg in segments):
            raise ShapeError("state carries no segment stacks but the agent has a graph extractor")
        y = extractor.embed(segments)  # type: ignore[arg-type]
        return torch.cat([feats, y], dim=-1)

    def act(self, state: EnvState, *, explore: bool = True) -> np.ndarray:
        with torch.no_grad():
            s = self.encode([state])[0]
        return select_action(self.actor, self.noise if explore else None, s)

    def policy(self) -> AgentPolicy:
        return AgentPolicy(self)

    # ------------------------------------------------------------ learning

    def remember(self, transition: Transition) -> None:
        self.buffer.push(transition)

    def update(self) -> Optional[UpdateStats]:
        dd = self.config.ddpg
        if len(self.buffer) < dd.batch_size:
            return None
        batch = self.buffer.sample(dd.batch_size)
        actions = torch.as_tensor(np.stack([t.action for t in batch]), dtype=DTYPE)
        rewards = torch.as_tensor([t.reward for t in batch], dtype=DTYPE)
        terminals = torch.as_tensor([1.0 if t.terminal else 0.0 for t in batch], dtype=DTYPE)

        with torch.no_grad():
            next_s = self.encode([t.next_state for t in batch], target=True)
            next_q = critic_forward(self.target_critic, next_s, actor_forward(self.target_actor, next_s))
            targets = critic_targets(rewards, next_q, terminals, dd.gamma)

        states = self.encode([t.state for t in batch])
        c_loss = critic_update(self.critic, self.critic_optimizer, states, actions, targets)
        a_loss = actor_update(self.actor, self.critic, self.actor_optimizer, states)

        soft_update(self.target_critic, self.critic, dd.rho)
        soft_update(self.target_actor, self.actor, dd.rho)
        if self.extractor is not None and self.target_extractor is not None:
            soft_update(self.target_extractor, self.extractor, dd.rho)
        return UpdateStats(critic_loss=c_loss, actor_loss=a_loss)

    def networks(self) -> dict[str, nn.Module]:
        nets: dict[str, nn.Module] = {
            "actor": self.actor,
            "critic": self.critic,
            "target_actor": self.target_actor,
            "target_critic": self.target_critic,
        }
        if self.extractor is not None and self.target_extractor is not None:
            nets["extractor"] = self.extractor
            nets["target_extractor"] = self.target_extractor
        return nets

    def parameters_finite(self) -> bool:
        return all(bool(torch.isfinite(p).all()) for net in self.networks().values() for p in net.parameters())


PolicyFn = Callable[[EnvState], np.ndarray]

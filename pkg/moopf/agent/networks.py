from __future__ import annotations

from typing import Literal, Optional, Sequence

import numpy as np
import torch
from torch import nn

from moopf.errors import ShapeError

DTYPE = torch.float64
Activation = Literal["relu", "tanh", "identity"]

_ACTIVATIONS = {
    "relu": torch.relu,
    "tanh": torch.tanh,
    "identity": lambda x: x,
}


class MLP(nn.Module):
    """Dense chain with a hidden activation and a separate output activation."""

    def __init__(
        self,
        sizes: Sequence[int],
        *,
        hidden_activation: Activation = "relu",
        output_activation: Activation = "identity",
        final_scale: float = 3e-3,
        generator: Optional[torch.Generator] = None,
    ) -> None:
        super().__init__()
        if len(sizes) < 2 or any(int(s) < 1 for s in sizes):
            raise ShapeError(f"MLP needs at least input and output widths >= 1, got {list(sizes)}")
        self.sizes = tuple(int(s) for s in sizes)
        self.hidden_activation = hidden_activation
        self.output_activation = output_activation
        self.weights = nn.ParameterList()
        self.biases = nn.ParameterList()
        last = len(self.sizes) - 2
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            bound = final_scale if i == last else 1.0 / np.sqrt(fan_in)
            w = (torch.rand(fan_in, fan_out, dtype=DTYPE, generator=generator) * 2.0 - 1.0) * bound
            b = (torch.rand(fan_out, dtype=DTYPE, generator=generator) * 2.0 - 1.0) * bound
            self.weights.append(nn.Parameter(w))
            self.biases.append(nn.Parameter(b))

    @property
    def in_width(self) -> int:
        return self.sizes[0]

    @property
    def out_width(self) -> int:
        return self.sizes[-1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] != self.in_width:
            raise ShapeError(f"input width {x.shape[-1]} does not match layer width {self.in_width}")
        hidden = _ACTIVATIONS[self.hidden_activation]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = x @ w + b
            x = _ACTIVATIONS[self.output_activation](x) if i == last else hidden(x)
        return x


def build_actor(
    state_width: int, action_dim: int, hidden: Sequence[int], *, generator: Optional[torch.Generator] = None
) -> MLP:
    return MLP([state_width, *hidden, action_dim], output_activation="tanh", generator=generator)


def build_critic(
    state_width: int,
    action_dim: int,
    hidden: Sequence[int],
    *,
    hidden_activation: Activation = "relu",
    generator: Optional[torch.Generator] = None,
) -> MLP:
    return MLP(
        [state_width + action_dim, *hidden, 1],
        hidden_activation=hidden_activation,
        generator=generator,
    )


def _as_batch(x: np.ndarray | torch.Tensor) -> torch.Tensor:
    t = torch.as_tensor(x, dtype=DTYPE)
    return t.unsqueeze(0) if t.dim() == 1 else t


def actor_forward(actor: MLP, state: np.ndarray | torch.Tensor) -> torch.Tensor:
    """Normalized action(s) in [-1, 1]; a 1-D state gives a 1-D action."""
    single = torch.as_tensor(state).dim() == 1
    out = actor(_as_batch(state))
    return out[0] if single else out


def critic_forward(
    critic: MLP, state: np.ndarray | torch.Tensor, action: np.ndarray | torch.Tensor
) -> torch.Tensor:
    """Q estimate per row; scalar tensor for a single (state, action) pair."""
    single = torch.as_tensor(state).dim() == 1
    s = _as_batch(state)
    a = _as_batch(action)
    if s.shape[0] != a.shape[0]:
        raise ShapeError(f"{s.shape[0]} states vs {a.shape[0]} actions")
    if s.shape[1] + a.shape[1] != critic.in_width:
        raise ShapeError(
            f"critic expects state+action width {critic.in_width}, got {s.shape[1]} + {a.shape[1]}"
        )
    q = critic(torch.cat([s, a], dim=-1)).squeeze(-1)
    return q[0] if single else q

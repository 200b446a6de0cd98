from __future__ import annotations

from typing import Optional

import numpy as np


class OUNoise:
    """Ornstein-Uhlenbeck exploration noise around zero, one state per action dim."""

    def __init__(
        self,
        dim: int,
        theta: float = 0.15,
        sigma: float = 0.2,
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        self.dim = int(dim)
        self.theta = float(theta)
        self.sigma = float(sigma)
        self._rng = rng if rng is not None else np.random.default_rng()
        self.state = np.zeros(self.dim)

    def reset(self) -> None:
        self.state = np.zeros(self.dim)

    def sample(self) -> np.ndarray:
        self.state = self.state - self.theta * self.state + self.sigma * self._rng.standard_normal(self.dim)
        return self.state.copy()


def decayed_sigma(start: float, final: float, episode: int, episodes: int) -> float:
    """Linear decay from ``start`` at the first episode to ``final`` at the last."""
    if episodes <= 1:
        return start
    frac = min(max(episode / (episodes - 1), 0.0), 1.0)
    return start + (final - start) * frac

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from moopf.errors import MoopfError
from moopf.grid.features import GraphSnapshot


@dataclass(frozen=True)
class SegmentConfig:
    recent: int = 12  # T_r
    daily: int = 7  # T_d
    weekly: int = 4  # T_w
    intervals_per_day: int = 24  # n_d

    @classmethod
    def from_config(cls, astgcn, env) -> "SegmentConfig":
        return cls(
            recent=astgcn.recent,
            daily=astgcn.daily,
            weekly=astgcn.weekly,
            intervals_per_day=env.intervals_per_day,
        )

    @property
    def depth(self) -> int:
        """Snapshots (t0 included) needed to build one segment set."""
        n_d = self.intervals_per_day
        return max(self.recent, self.daily * n_d + 1, 7 * self.weekly * n_d + 1)

    def offsets(self) -> Dict[str, Tuple[int, ...]]:
        n_d = self.intervals_per_day
        return {
            "recent": tuple(range(self.recent - 1, -1, -1)),
            "daily": tuple(k * n_d for k in range(self.daily, -1, -1)),
            "weekly": tuple(7 * k * n_d for k in range(self.weekly, -1, -1)),
        }

    @property
    def lengths(self) -> Tuple[int, int, int]:
        return self.recent, self.daily + 1, self.weekly + 1


@dataclass(frozen=True)
class SegmentSet:
    """Recent, daily and weekly stacks ending at the same interval t0.

    Stacks hold references to immutable snapshots; ``tensor`` materializes an
    N x F x T array, oldest column first.
    """

    t0: int
    recent: Tuple[GraphSnapshot, ...]
    daily: Tuple[GraphSnapshot, ...]
    weekly: Tuple[GraphSnapshot, ...]

    def tensor(self, which: str) -> np.ndarray:
        stack = getattr(self, which)
        return np.stack([s.X for s in stack], axis=-1)

    @property
    def X_r(self) -> np.ndarray:
        return self.tensor("recent")

    @property
    def X_d(self) -> np.ndarray:
        return self.tensor("daily")

    @property
    def X_w(self) -> np.ndarray:
        return self.tensor("weekly")

    def tensors(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.X_r, self.X_d, self.X_w


def build_segments(history: Sequence[GraphSnapshot], t0: int, cfg: SegmentConfig) -> SegmentSet:
    """Slice the recent/daily/weekly stacks out of a snapshot history."""
    if not history:
        raise MoopfError("empty snapshot history")
    first = history[0].time_index
    contiguous = history[-1].time_index - first == len(history) - 1
    lookup = None if contiguous else {s.time_index: s for s in history}

    def at(t: int) -> GraphSnapshot:
        if lookup is None:
            pos = t - first
            if 0 <= pos < len(history):
                return history[pos]
        elif t in lookup:
            return lookup[t]
        raise MoopfError(
            f"insufficient history: interval {t} needed for t0={t0} (depth {cfg.depth} required)"
        )

    offsets = cfg.offsets()
    return SegmentSet(
        t0=t0,
        recent=tuple(at(t0 - k) for k in offsets["recent"]),
        daily=tuple(at(t0 - k) for k in offsets["daily"]),
        weekly=tuple(at(t0 - k) for k in offsets["weekly"]),
    )

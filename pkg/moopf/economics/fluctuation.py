from __future__ import annotations

from collections import deque
from typing import Deque

import numpy as np

from moopf.errors import MoopfError, ShapeError


class VoltageHistory:
    """Ring buffer of per-bus |V| over the last ``window`` intervals."""

    def __init__(self, window: int, n_buses: int) -> None:
        if window < 1:
            raise MoopfError("fluctuation window must be >= 1")
        self.window = window
        self.n_buses = n_buses
        self._buf: Deque[np.ndarray] = deque(maxlen=window)

    def push(self, vmag: np.ndarray) -> None:
        v = np.asarray(vmag, dtype=float)
        if v.shape != (self.n_buses,):
            raise ShapeError(f"expected {self.n_buses} bus voltages, got {v.shape}")
        self._buf.append(v.copy())

    @property
    def full(self) -> bool:
        return len(self._buf) == self.window

    def __len__(self) -> int:
        return len(self._buf)

    def values(self) -> np.ndarray:
        """Oldest first, shape (len, n_buses)."""
        return np.array(self._buf)

    def copy(self) -> "VoltageHistory":
        out = VoltageHistory(self.window, self.n_buses)
        for row in self._buf:
            out._buf.append(row.copy())
        return out


def voltage_fluctuation(history: VoltageHistory, current: np.ndarray) -> float:
    """Sum over buses of |V_now - trailing mean of the window|."""
    if not history.full:
        raise MoopfError(f"voltage history holds {len(history)} of {history.window} intervals")
    cur = np.asarray(current, dtype=float)
    if cur.shape != (history.n_buses,):
        raise ShapeError(f"expected {history.n_buses} bus voltages, got {cur.shape}")
    # deviations first, so identical rows cancel exactly
    return float(np.sum(np.abs((cur - history.values()).mean(axis=0))))

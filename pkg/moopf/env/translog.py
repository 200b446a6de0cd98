from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd

from moopf.env.rewards import RewardBreakdown

_LOGGER = logging.getLogger(__name__)

COLUMNS = [
    "episode",
    "t",
    "reward",
    "r1",
    "r2",
    "r3",
    "r4",
    "r5",
    "r6",
    "r7",
    "r8",
    "divergence_penalty",
    "terminal",
    "reason",
]


class TransitionLog:
    """Buffered CSV writer; rows are appended to ``path`` on every flush."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._rows: List[Dict[str, Any]] = []

    def record(
        self,
        episode: int,
        t: int,
        reward: float,
        breakdown: RewardBreakdown,
        terminal: bool,
        reason: str = "",
    ) -> None:
        row: Dict[str, Any] = {"episode": episode, "t": t, "reward": reward}
        row.update(breakdown.as_row())
        row["terminal"] = bool(terminal)
        row["reason"] = reason
        self._rows.append(row)

    def __len__(self) -> int:
        return len(self._rows)

    def flush(self) -> int:
        if not self._rows:
            return 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame(self._rows, columns=COLUMNS)
        write_header = not self.path.exists() or self.path.stat().st_size == 0
        frame.to_csv(self.path, mode="a", header=write_header, index=False, float_format="%.17g")
        count = len(self._rows)
        self._rows.clear()
        _LOGGER.debug("transition log flushed", extra={"path": str(self.path), "rows": count})
        return count


def read_transition_log(path: str | Path) -> pd.DataFrame:
    return pd.read_csv(path)

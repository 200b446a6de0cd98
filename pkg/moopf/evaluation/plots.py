"""Static PNG rendering of the CSV tables a run directory holds."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from moopf.artifacts import read_frame  # noqa: E402

_LOGGER = logging.getLogger(__name__)


def _save(fig, out: Path) -> Path:
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def _training(run_dir: Path) -> Path:
    frame = read_frame(run_dir / "training.csv")
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(frame["episode"], frame["cumulative_reward"], lw=1.0)
    if len(frame) >= 10:
        ax.plot(frame["episode"], frame["cumulative_reward"].rolling(10).mean(), lw=2.0, label="10-episode mean")
        ax.legend()
    ax.set_xlabel("episode")
    ax.set_ylabel("cumulative reward")
    return _save(fig, run_dir / "training.png")


def _compare(run_dir: Path) -> Path:
    frame = read_frame(run_dir / "compare.csv")
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 4))
    left.bar(frame["algorithm"], frame["score"], yerr=frame["std"])
    left.set_ylabel("SCORE")
    right.bar(frame["algorithm"], frame["mean_step_seconds"])
    right.set_ylabel("seconds per decision")
    return _save(fig, run_dir / "compare.png")


def _faults(run_dir: Path) -> Path:
    frame = read_frame(run_dir / "faults.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(frame["fault_count"], frame["mean_response"], yerr=frame["std_response"], marker="o", capsize=3)
    ax.set_xlabel("faulted generator buses")
    ax.set_ylabel("response time (intervals)")
    return _save(fig, run_dir / "faults.png")


def _sweep(run_dir: Path) -> Path:
    traces = read_frame(run_dir / "sweep_traces.csv")
    table = run_dir / "sweep.csv"
    if table.exists():
        bus = int(read_frame(table)["monitored_bus"].iloc[0])
    else:
        bus = int(traces["bus"].iloc[-1])
    traces = traces[traces["bus"] == bus]
    fig, ax = plt.subplots(figsize=(7, 4))
    for w4, group in traces.groupby("w4"):
        ax.plot(group["t"], group["vmag"], label=f"w4={w4:g}")
    ax.set_xlabel("interval")
    ax.set_ylabel(f"|V| at bus {bus} (p.u.)")
    ax.legend()
    return _save(fig, run_dir / "sweep.png")


def _attention(run_dir: Path, name: str) -> Path:
    frame = read_frame(run_dir / f"{name}.csv")
    matrix = frame.iloc[:, 1:].to_numpy(dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(matrix, cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_title(name.replace("_", " "))
    return _save(fig, run_dir / f"{name}.png")


_RENDERERS = {
    "training.csv": _training,
    "compare.csv": _compare,
    "faults.csv": _faults,
    "sweep_traces.csv": _sweep,
    "attention_spatial.csv": lambda d: _attention(d, "attention_spatial"),
    "attention_temporal.csv": lambda d: _attention(d, "attention_temporal"),
}


def render_plots(run_dir: str | Path) -> List[Path]:
    """Render every known table present in ``run_dir``; returns the PNG paths."""
    root = Path(run_dir)
    written = []
    for name, render in _RENDERERS.items():
        if (root / name).exists():
            written.append(render(root))
    _LOGGER.info("plots rendered", extra={"run_dir": str(root), "count": len(written)})
    return written

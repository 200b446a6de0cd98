from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator

log = logging.getLogger("moopf.telemetry")


@contextmanager
def timed(stage: str, ctx: Dict[str, Any] | None = None) -> Iterator[Dict[str, Any]]:
    """Context manager that logs elapsed ms for the given stage.

    The yielded dict receives ``seconds`` on exit so callers can reuse the
    measurement (per-step decision time, episode wall time).
    """
    start = time.perf_counter()
    payload: Dict[str, Any] = {"stage": stage}
    try:
        yield payload
    finally:
        elapsed = time.perf_counter() - start
        payload["seconds"] = elapsed
        payload["ms"] = int(elapsed * 1000)
        if ctx:
            payload.update(ctx)
        log.debug("timing", extra={k: v for k, v in payload.items() if k != "seconds"})


def configure_logging(level: str = "INFO") -> None:
    """Install a rich console handler on the root logger (CLI entry only)."""
    from rich.logging import RichHandler

    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    root.addHandler(RichHandler(rich_tracebacks=False, show_path=False))
    root.setLevel(level.upper())

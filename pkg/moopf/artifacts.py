"""Run output directories: CSV tables, a JSON manifest and a shared run index."""

from __future__ import annotations

import json
import logging
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Protocol

import pandas as pd
from filelock import FileLock

from moopf import __version__
from moopf.config import RunConfig, config_hash
from moopf.constants import MANIFEST_SCHEMA_VERSION
from moopf.seed import seed_set_digest

_LOGGER = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"
INDEX_FILE = "index.jsonl"


class ArtifactStore(Protocol):
    def write_text(self, relative_path: str, text: str) -> str: ...

    def write_frame(self, relative_path: str, frame: pd.DataFrame) -> str: ...

    @property
    def root(self) -> str: ...


class LocalStore:
    def __init__(self, base_path: Path) -> None:
        self._root = Path(base_path)
        self._root.mkdir(parents=True, exist_ok=True)

    @property
    def root(self) -> str:
        return str(self._root)

    def path(self, relative_path: str) -> Path:
        dest = self._root / relative_path
        dest.parent.mkdir(parents=True, exist_ok=True)
        return dest

    def write_text(self, relative_path: str, text: str) -> str:
        dest = self.path(relative_path)
        dest.write_text(text, encoding="utf-8")
        return str(dest)

    def write_frame(self, relative_path: str, frame: pd.DataFrame) -> str:
        """CSV with round-trip float precision."""
        dest = self.path(relative_path)
        frame.to_csv(dest, index=False, float_format=CSV_FLOAT_FORMAT)
        return str(dest)


def read_frame(path: str | Path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


@dataclass
class RunRecord:
    run_id: str
    command: str
    store: ArtifactStore
    config: RunConfig
    seeds: List[int] = field(default_factory=list)
    outputs: Dict[str, str] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)

    def write_frame(self, name: str, frame: pd.DataFrame) -> str:
        uri = self.store.write_frame(f"{name}.csv", frame)
        self.outputs[name] = uri
        return uri

    def manifest(self) -> Dict[str, Any]:
        return {
            "schema": MANIFEST_SCHEMA_VERSION,
            "run_id": self.run_id,
            "command": self.command,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "moopf_version": __version__,
            "case": self.config.case,
            "config_hash": config_hash(self.config),
            "config": self.config.model_dump(mode="json"),
            "seeds": [int(s) for s in self.seeds],
            "seed_digest": seed_set_digest(self.seeds),
            "outputs": dict(self.outputs),
            "summary": self.summary,
        }

    def finish(self) -> str:
        """Write manifest.json and append one line to the shared run index."""
        manifest = self.manifest()
        uri = self.store.write_text("manifest.json", json.dumps(manifest, indent=2, default=str))
        index = Path(self.store.root).parent / INDEX_FILE
        line = {
            "run_id": self.run_id,
            "command": self.command,
            "case": manifest["case"],
            "config_hash": manifest["config_hash"],
            "seed_digest": manifest["seed_digest"],
            "created_at": manifest["created_at"],
            "manifest": uri,
        }
        with FileLock(str(index) + ".lock"):
            with index.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(line, sort_keys=True) + "\n")
        _LOGGER.info("run recorded", extra={"run_id": self.run_id, "command": self.command, "manifest": uri})
        return uri


def open_run(
    out_dir: str | Path,
    command: str,
    config: RunConfig,
    *,
    seeds: Iterable[int] = (),
    run_id: Optional[str] = None,
) -> RunRecord:
    rid = run_id or f"{command}-{datetime.now(timezone.utc):%Y%m%dT%H%M%S}-{uuid.uuid4().hex[:6]}"
    store = LocalStore(Path(out_dir) / rid)
    return RunRecord(run_id=rid, command=command, store=store, config=config, seeds=list(seeds))


def read_index(out_dir: str | Path) -> List[Dict[str, Any]]:
    index = Path(out_dir) / INDEX_FILE
    if not index.exists():
        return []
    with FileLock(str(index) + ".lock"):
        lines = index.read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]

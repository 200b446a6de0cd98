from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest
import torch

from moopf.grid.loader import load_case

ROOT = Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


@pytest.fixture(autouse=True)
def _isolate_moopf_env(monkeypatch) -> None:
    """Keep a developer's MOOPF_* variables from leaking into seed and settings tests."""
    for key in list(os.environ):
        if key.startswith("MOOPF_"):
            monkeypatch.delenv(key, raising=False)


@pytest.fixture(autouse=True)
def _torch_seed() -> None:
    torch.manual_seed(0)


@pytest.fixture(scope="session")
def case2():
    return load_case("case2")


@pytest.fixture(scope="session")
def case6():
    return load_case("case6")


@pytest.fixture(scope="session")
def case33():
    return load_case("case33")

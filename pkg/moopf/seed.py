from __future__ import annotations

import hashlib
from typing import Iterable


def _digest_to_seed(canon: str) -> int:
    h = hashlib.sha256(canon.encode("utf-8")).digest()
    # 63 bits so the value is accepted by numpy and torch alike
    return int.from_bytes(h[:8], "big") >> 1


def make_run_seed(case_name: str, config_hash: str) -> int:
    """Derive the global run seed when neither config nor env provides one."""
    canon = "|".join([
        "MOOPF",
        f"case={case_name}",
        f"config={config_hash}",
    ])
    return _digest_to_seed(canon)


def derive_seed(base: int, *labels: object) -> int:
    """Child seed for a named sub-stream (episode index, worker, arm...)."""
    canon = "|".join([f"base={int(base)}", *(str(label) for label in labels)])
    return _digest_to_seed(canon)


def episode_seeds(base: int, count: int, stream: str = "eval") -> list[int]:
    return [derive_seed(base, stream, f"episode={n}") for n in range(count)]


def seed_set_digest(seeds: Iterable[int]) -> str:
    canon = ",".join(str(int(s)) for s in seeds)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

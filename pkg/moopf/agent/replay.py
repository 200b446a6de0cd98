from __future__ import annotations

from typing import Generic, List, Optional, TypeVar

import numpy as np

from moopf.errors import MoopfError

T = TypeVar("T")


class ReplayBuffer(Generic[T]):
    """Fixed-capacity ring; batches are drawn uniformly without replacement."""

    def __init__(self, capacity: int, rng: Optional[np.random.Generator] = None) -> None:
        if capacity < 1:
            raise MoopfError("replay capacity must be >= 1")
        self.capacity = int(capacity)
        self._items: List[T] = []
        self._cursor = 0
        self._rng = rng if rng is not None else np.random.default_rng()

    def push(self, item: T) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._cursor] = item
        self._cursor = (self._cursor + 1) % self.capacity

    def __len__(self) -> int:
        return len(self._items)

    @property
    def cursor(self) -> int:
        return self._cursor

    def sample(self, batch_size: int) -> List[T]:
        if batch_size < 1:
            raise MoopfError("batch size must be >= 1")
        if batch_size > len(self._items):
            raise MoopfError(f"cannot draw {batch_size} items from a buffer of {len(self._items)}")
        idx = self._rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[int(i)] for i in idx]

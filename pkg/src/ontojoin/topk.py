from __future__ import annotations

import bisect
import math
from typing import NamedTuple


class PairKey(NamedTuple):
    lo: int
    hi: int

    @classmethod
    def of(cls, a: int, b: int) -> "PairKey":
        if a == b:
            raise ValueError("self-pairs are not part of a join")
        return cls(a, b) if a < b else cls(b, a)


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


class TopKList:
    """Bounded list of the k best ``(distance, PairKey)`` entries.

    Ties break on the pair key, so the contents are deterministic.
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self._items: list[tuple[float, PairKey]] = []
        self._keys: set[PairKey] = set()

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, key) -> bool:
        return key in self._keys

    @property
    def dist(self) -> float:
        """k-th smallest distance, infinite while the list is not full."""
        if len(self._items) < self.k:
            return math.inf
        return self._items[-1][0]

    def offer(self, key: PairKey, distance: float) -> bool:
        if key in self._keys:
            return False
        entry = (distance, key)
        if len(self._items) == self.k:
            if entry >= self._items[-1]:
                return False
            _, dropped = self._items.pop()
            self._keys.discard(dropped)
        bisect.insort(self._items, entry)
        self._keys.add(key)
        return True

    def items(self) -> list[tuple[PairKey, float]]:
        return [(key, d) for d, key in self._items]

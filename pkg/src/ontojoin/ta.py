"""Top-k EMD join: threshold algorithm over reduced dimensions with an
L1-reduced -> L1-full -> exact EMD filtering cascade."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

from .dataset import ObjectDescription, reduce_mass_vector, to_mass_vector
from .emd import emd_exact, full_bound_scale, l1_half, reduced_bound_scale
from .ontology import OntologyTree, reduce_at_height_one
from .topk import PairKey, TopKList, n_pairs


class DimensionStream:
    """Object pairs of one dimension in non-decreasing order of value gap.

    Objects are sorted by their value; the heap starts with the N-1 gaps
    between neighbours. Emitted pairs are intervals ``[i, j]`` of sorted
    positions. A longer interval enters the heap only once two emitted
    intervals sharing an endpoint cover it, one of them a neighbour gap.
    """

    def __init__(self, values, object_ids=None, dim: int | None = None):
        if object_ids is None:
            object_ids = range(len(values))
        ranked = sorted(zip(values, object_ids))
        self.dim = dim
        self.values = [v for v, _ in ranked]
        self.objects = [o for _, o in ranked]
        self.tau = 0.0
        self.emitted = 0
        n = len(ranked)
        self.heap = [(self.values[i + 1] - self.values[i], i, i + 1) for i in range(n - 1)]
        heapq.heapify(self.heap)
        self._pushed = {(i, i + 1) for i in range(n - 1)}
        # emitted intervals indexed by endpoint
        self._ends_at: list[list[int]] = [[] for _ in range(n)]
        self._starts_at: list[list[int]] = [[] for _ in range(n)]
        self._gap_done = [False] * max(n - 1, 0)

    def __len__(self) -> int:
        return len(self.heap)

    @property
    def exhausted(self) -> bool:
        return not self.heap

    def _push(self, i: int, j: int) -> None:
        if (i, j) not in self._pushed:
            self._pushed.add((i, j))
            heapq.heappush(self.heap, (self.values[j] - self.values[i], i, j))

    def next_pair(self) -> tuple[PairKey, float] | None:
        if not self.heap:
            return None
        diff, i, j = heapq.heappop(self.heap)
        self.tau = diff
        self.emitted += 1
        if j == i + 1:
            self._gap_done[i] = True
            for w in self._ends_at[i]:
                self._push(w, j)
            for z in self._starts_at[j]:
                self._push(i, z)
        else:
            if j + 1 < len(self.values) and self._gap_done[j]:
                self._push(i, j + 1)
            if i > 0 and self._gap_done[i - 1]:
                self._push(i - 1, j)
        self._ends_at[j].append(i)
        self._starts_at[i].append(j)
        return PairKey.of(self.objects[i], self.objects[j]), diff

    def drain(self):
        while (item := self.next_pair()) is not None:
            yield item


@dataclass
class JoinStats:
    pairs_seen: int = 0
    l1_reduced_count: int = 0
    l1_full_count: int = 0
    emd_count: int = 0
    stream_pops: int = 0
    total_pairs: int = 0
    threshold: float = 0.0  # final R

    @property
    def eta(self) -> float:
        return self.emd_count / self.total_pairs if self.total_pairs else 0.0

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.pairs_seen, self.l1_reduced_count, self.l1_full_count, self.emd_count)


_last_stats = JoinStats()


def join_stats() -> tuple[int, int, int, int]:
    """Counters of the most recent :func:`topk_emd_join` in this process."""
    return _last_stats.as_tuple()


def topk_emd_join(
    objects: list[ObjectDescription],
    tree: OntologyTree,
    k: int,
    stats: JoinStats | None = None,
    trace: Callable | None = None,
) -> list[tuple[PairKey, float]]:
    """Exact top-k pairs by EMD. ``trace(dim, key, diff)`` observes every
    stream emission."""
    global _last_stats
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(objects) < 2:
        raise ValueError("need at least two objects")
    stats = stats if stats is not None else JoinStats()
    stats.total_pairs = n_pairs(len(objects))
    _last_stats = stats

    reduction = reduce_at_height_one(tree)
    by_id = {o.id: i for i, o in enumerate(objects)}
    full = [to_mass_vector(o) for o in objects]
    reduced = [reduce_mass_vector(v, reduction) for v in full]
    # bounds are scaled by the smallest ground distance they may rely on
    scale_t = reduced_bound_scale(tree)
    scale_T = full_bound_scale(tree)

    ids = [o.id for o in objects]
    streams = [
        DimensionStream([r.get(term, 0.0) for r in reduced], ids, dim)
        for dim, term in enumerate(reduction.retained)
    ]
    t = len(streams)
    tau = [0.0] * t
    top = TopKList(k)
    seen: set[PairKey] = set()
    threshold = 0.0
    j = 0
    while threshold < top.dist:
        item = streams[j].next_pair()
        if item is None:
            # one drained dimension has emitted every pair: nothing is unseen
            break
        stats.stream_pops += 1
        key, diff = item
        tau[j] = diff
        if trace:
            trace(j, key, diff)
        if key not in seen:
            seen.add(key)
            stats.pairs_seen += 1
            a, b = by_id[key.lo], by_id[key.hi]
            d1 = l1_half(reduced[a], reduced[b], scale_t)
            stats.l1_reduced_count += 1
            if d1 <= top.dist:
                d2 = max(d1, l1_half(full[a], full[b], scale_T))
                stats.l1_full_count += 1
                if d2 <= top.dist:
                    d3 = emd_exact(full[a], full[b], tree)[0]
                    stats.emd_count += 1
                    if d3 <= top.dist:
                        top.offer(key, d3)
        threshold = scale_t * sum(tau) / 2.0
        j = (j + 1) % t
    stats.threshold = threshold
    return top.items()

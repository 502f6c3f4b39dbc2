"""Top-k join under the average pairwise term distance.

Build phase: every node stores, for each object with a term in its subtree,
the term count ``n`` and the total distance ``w`` of those terms to the node.

Query phase: best-first search over pair estimates whose lower bounds come
from the (n, w) summaries. Candidate pairs are produced by ordered streams so
that no pair is materialised before its bound can matter.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .ontology import InvertedIndex, OntologyTree
from .topk import PairKey, TopKList, n_pairs

VARIANTS = ("next-estimate", "complete")


class NodeObjectInfo(NamedTuple):
    n: int  # object's terms in this subtree
    w: float  # their total distance to this node
    own: bool  # object is described by the node's own term
    groups: tuple[int, ...]  # children whose subtree holds the object's terms

    @property
    def span(self) -> int:
        return int(self.own) + len(self.groups)


class AvgStores:
    """Per-node ``object -> NodeObjectInfo`` maps produced by :func:`build`."""

    def __init__(self, tree: OntologyTree, stores: list[dict[int, NodeObjectInfo]]):
        self.tree = tree
        self.stores = stores

    def __getitem__(self, node: int) -> dict[int, NodeObjectInfo]:
        return self.stores[node]

    def size(self) -> int:
        return sum(len(s) for s in self.stores)


def build(tree: OntologyTree, index: InvertedIndex) -> AvgStores:
    stores: list[dict[int, NodeObjectInfo]] = [None] * tree.size
    for node in tree.postorder():
        acc: dict[int, list] = {o: [1, 0.0, True, []] for o in index[node]}
        for child in tree.children[node]:
            edge = tree.edge_weight[child]
            for o, ci in stores[child].items():
                entry = acc.get(o)
                if entry is None:
                    entry = acc[o] = [0, 0.0, False, []]
                entry[0] += ci.n
                entry[1] += ci.w + ci.n * edge
                entry[3].append(child)
        stores[node] = {o: NodeObjectInfo(n, w, own, tuple(g)) for o, (n, w, own, g) in acc.items()}
    return AvgStores(tree, stores)


def _group_of(info: NodeObjectInfo, node: int) -> int:
    """Group id of a single-span object: the node itself or one child."""
    return node if info.own else info.groups[0]


def lower_bound_at_node(node: int, info_i: NodeObjectInfo, info_j: NodeObjectInfo) -> tuple[float, bool]:
    """Lower bound on the summed term distances of a pair inside ``node``'s
    subtree, and whether it is exact. The caller divides by n_i * n_j."""
    si, sj = info_i.span, info_j.span
    if si == 1 and sj == 1:
        gi, gj = _group_of(info_i, node), _group_of(info_j, node)
        if gi == gj:
            # both confined to the node's own term: zero and exact
            return 0.0, gi == node
        return info_j.n * info_i.w + info_i.n * info_j.w, True
    if si > 1 and sj > 1:
        return info_i.w + info_j.w, False
    return (info_i.w if si == 1 else info_j.w), False


def _shared_children(info_i: NodeObjectInfo, info_j: NodeObjectInfo) -> list[int]:
    if len(info_i.groups) > len(info_j.groups):
        info_i, info_j = info_j, info_i
    other = set(info_j.groups)
    return [c for c in info_i.groups if c in other]


def cross_sum(stores: AvgStores, node: int, i: int, j: int) -> float:
    """Exact sum of distances over term pairs lying in different groups at
    ``node`` (the node's own term counts as a group)."""
    tree = stores.tree
    a, b = stores[node][i], stores[node][j]
    total = a.w * b.n + b.w * a.n
    for c in _shared_children(a, b):
        edge = tree.edge_weight[c]
        ca, cb = stores[c][i], stores[c][j]
        wa, wb = ca.w + ca.n * edge, cb.w + cb.n * edge
        total -= wa * cb.n + wb * ca.n
    return total


@dataclass
class PairEstimate:
    key: PairKey
    n_i: int
    n_j: int
    accumulated: float = 0.0
    frontier: list = field(default_factory=list)  # heap of (depth, node, bound)
    done: bool = False
    updates: int = 0

    @property
    def bound(self) -> float:
        return (self.accumulated + sum(b for _, _, b in self.frontier)) / (self.n_i * self.n_j)

    @property
    def value(self) -> float:
        if not self.done:
            raise ValueError("estimate is not exact yet")
        return self.accumulated / (self.n_i * self.n_j)

    @classmethod
    def at_node(cls, stores: AvgStores, node: int, i: int, j: int) -> "PairEstimate":
        a, b = stores[node][i], stores[node][j]
        est = cls(PairKey.of(i, j), a.n, b.n)
        lb, exact = lower_bound_at_node(node, a, b)
        if exact:
            est.accumulated = lb
            est.done = True
        else:
            est.frontier.append((stores.tree.depth[node], node, lb))
        return est


def update_estimate(est: PairEstimate, stores: AvgStores, variant: str, objects=None) -> PairEstimate:
    """Refine a pair estimate in place.

    ``next-estimate`` resolves one frontier node (breadth first): its exact
    cross-group sum is banked and children still shared by both objects join
    the frontier with their own bounds. ``complete`` sums every term pair.
    """
    if est.done:
        raise ValueError(f"estimate for {est.key} is already exact")
    est.updates += 1
    i, j = est.key
    if variant == "complete":
        a, b = objects[i], objects[j]
        est.accumulated = float(stores.tree.distance_matrix(a.terms, b.terms).sum())
        est.frontier.clear()
        est.done = True
        return est
    if variant != "next-estimate":
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    _, node, _ = heapq.heappop(est.frontier)
    est.accumulated += cross_sum(stores, node, i, j)
    depth = stores.tree.depth
    for c in _shared_children(stores[node][i], stores[node][j]):
        lb, exact = lower_bound_at_node(c, stores[c][i], stores[c][j])
        if exact:
            est.accumulated += lb
        else:
            heapq.heappush(est.frontier, (depth[c], c, lb))
    est.done = not est.frontier
    return est


# ---------------------------------------------------------------------------
# ordered candidate streams


class ProductStream:
    """Pairs from two key-sorted lists in non-decreasing ``bound(ka, kb)``."""

    def __init__(self, node: int, left, right, bound: Callable[[float, float], float]):
        self.node = node
        self.left, self.right, self.fn = left, right, bound
        self.heap = [(bound(left[0][0], right[0][0]), 0, 0)]
        self.seen = {(0, 0)}

    def peek(self) -> float:
        return self.heap[0][0]

    @property
    def exhausted(self) -> bool:
        return not self.heap

    def _add(self, p: int, q: int) -> None:
        if p < len(self.left) and q < len(self.right) and (p, q) not in self.seen:
            self.seen.add((p, q))
            heapq.heappush(self.heap, (self.fn(self.left[p][0], self.right[q][0]), p, q))

    def pop(self) -> tuple[int, int, float]:
        b, p, q = heapq.heappop(self.heap)
        self._add(p + 1, q)
        self._add(p, q + 1)
        return self.left[p][1], self.right[q][1], b


class TriangleStream(ProductStream):
    """Unordered pairs within one key-sorted list."""

    def __init__(self, node: int, items, bound: Callable[[float, float], float]):
        self.node = node
        self.left = self.right = items
        self.fn = bound
        self.heap = [(bound(items[0][0], items[1][0]), 0, 1)]
        self.seen = {(0, 1)}

    def _add(self, p: int, q: int) -> None:
        if p < q < len(self.left) and (p, q) not in self.seen:
            self.seen.add((p, q))
            heapq.heappush(self.heap, (self.fn(self.left[p][0], self.left[q][0]), p, q))

    def pop(self) -> tuple[int, int, float]:
        b, p, q = heapq.heappop(self.heap)
        self._add(p + 1, q)
        self._add(p, q + 1)
        return self.left[p][1], self.left[q][1], b


@dataclass
class LazySubtree:
    """Pairs of objects confined to one child subtree; expanded on demand."""

    node: int
    objects: list[int]

    def peek(self) -> float:
        return 0.0


def _sum_keys(a: float, b: float) -> float:
    return a + b


def node_streams(stores: AvgStores, node: int, objects) -> list:
    """Split ``objects`` (all terms inside ``node``'s subtree) into single-span
    lists per group and multi-span partitions per term count, and pair them."""
    info = stores[node]
    singles: dict[int, list] = {}
    multis: dict[int, list] = {}
    for o in objects:
        x = info[o]
        if x.span == 1:
            singles.setdefault(_group_of(x, node), []).append((x.w / x.n, o))
        else:
            multis.setdefault(x.n, []).append((x.w, o))
    for lst in itertools.chain(singles.values(), multis.values()):
        lst.sort()

    streams: list = []
    groups = sorted(singles)
    for gi, ga in enumerate(groups):
        la = singles[ga]
        if len(la) > 1:
            if ga == node:
                streams.append(TriangleStream(node, la, lambda a, b: 0.0))
            else:
                streams.append(LazySubtree(ga, [o for _, o in la]))
        for gb in groups[gi + 1:]:
            streams.append(ProductStream(node, la, singles[gb], _sum_keys))
    sizes = sorted(multis)
    for si, n in enumerate(sizes):
        mn = multis[n]
        if len(mn) > 1:
            streams.append(TriangleStream(node, mn, lambda a, b, d=n * n: (a + b) / d))
        for m in sizes[si + 1:]:
            streams.append(ProductStream(node, mn, multis[m], lambda a, b, d=n * m: (a + b) / d))
    for ga in groups:
        for n in sizes:
            streams.append(ProductStream(node, singles[ga], multis[n], lambda a, b, n=n: a / n))
    return streams


@dataclass
class QueryStats:
    variant: str = ""
    total_pairs: int = 0
    pairs_generated: int = 0  # estimates created from streams
    pairs_examined: int = 0  # distinct pairs popped below the k-th distance
    update_calls: int = 0
    exact_evaluations: int = 0  # pairs resolved through refinement
    subtree_expansions: int = 0

    @property
    def eta(self) -> float:
        return self.pairs_examined / self.total_pairs if self.total_pairs else 0.0


_STREAM, _LAZY, _PAIR = 0, 1, 2


def avgdist_query(
    stores: AvgStores,
    k: int,
    variant: str = "next-estimate",
    objects=None,
    stats: QueryStats | None = None,
    trace: Callable | None = None,
) -> list[tuple[PairKey, float]]:
    """Best-first top-k search.

    ``objects`` (indexable by object id) is needed by the ``complete``
    variant. ``trace(event, payload)`` observes ``"create"``/``"update"``
    events with a :class:`PairEstimate` and ``"emit"`` events with
    ``(stream, bound)``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant == "complete" and objects is None:
        raise ValueError("the complete variant needs the object descriptions")
    tree = stores.tree
    root = tree.root
    everyone = sorted(stores[root])
    stats = stats if stats is not None else QueryStats()
    stats.variant = variant
    stats.total_pairs = n_pairs(len(everyone))

    counter = itertools.count()
    heap: list = []

    def push_source(src) -> None:
        kind = _LAZY if isinstance(src, LazySubtree) else _STREAM
        heapq.heappush(heap, (src.peek(), kind, (), next(counter), src))

    def push_pair(est: PairEstimate) -> None:
        heapq.heappush(heap, (est.bound, _PAIR, est.key, next(counter), est))

    if len(everyone) >= 2:
        for src in node_streams(stores, root, everyone):
            push_source(src)

    top = TopKList(k)
    created: set[PairKey] = set()
    examined: set[PairKey] = set()
    while heap:
        bound, kind, _, _, item = heapq.heappop(heap)
        if bound >= top.dist:
            break
        if kind == _LAZY:
            stats.subtree_expansions += 1
            for src in node_streams(stores, item.node, item.objects):
                push_source(src)
            continue
        if kind == _STREAM:
            i, j, b = item.pop()
            if trace:
                trace("emit", (item, b))
            if not item.exhausted:
                push_source(item)
            key = PairKey.of(i, j)
            if key in created:
                continue
            created.add(key)
            est = PairEstimate.at_node(stores, item.node, i, j)
            stats.pairs_generated += 1
            if trace:
                trace("create", est)
            push_pair(est)
            continue
        est = item
        examined.add(est.key)
        if not est.done:
            update_estimate(est, stores, variant, objects)
            stats.update_calls += 1
            if est.done:
                stats.exact_evaluations += 1
            if trace:
                trace("update", est)
        if est.done:
            value = est.value
            if value < top.dist:
                top.offer(est.key, value)
        else:
            push_pair(est)
    stats.pairs_examined = len(examined)
    return top.items()

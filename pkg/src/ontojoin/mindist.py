"""Top-k join under the minimum pairwise term distance.

Each node merges the object lists of its children (shifted by the edge
weight) with its own inverted list, pairs up the closest objects, and merges
the resulting pair list with its children's pair lists. The root's pair list
is the answer.
"""
from __future__ import annotations

import heapq
import math

from .ontology import InvertedIndex, OntologyTree
from .topk import PairKey


def min_k_prime(k: int) -> int:
    """Smallest m with m(m-1)/2 >= k."""
    return math.ceil(0.5 + math.sqrt(0.25 + 2 * k))


def safe_k_prime(k: int) -> int:
    # A node's own object at distance 0 plus k objects in distinct child
    # subtrees needs k + 1 slots; fewer can drop a true top-k pair.
    return k + 1


def merge_object_lists(lists, k_prime: int) -> list[tuple[int, float]]:
    """k' distinct objects with the smallest distance over sorted input lists."""
    best: dict[int, float] = {}
    for lst in lists:
        for obj, d in lst:
            if d < best.get(obj, math.inf):
                best[obj] = d
    heap = [(lst[0][1], lst[0][0], li, 0) for li, lst in enumerate(lists) if lst]
    heapq.heapify(heap)
    out: list[tuple[int, float]] = []
    taken: set[int] = set()
    while heap and len(out) < k_prime:
        d, obj, li, pos = heapq.heappop(heap)
        if obj not in taken and best[obj] == d:
            taken.add(obj)
            out.append((obj, d))
        pos += 1
        lst = lists[li]
        if pos < len(lst):
            heapq.heappush(heap, (lst[pos][1], lst[pos][0], li, pos))
    return out


def gen_pairs(objects, k: int) -> list[tuple[PairKey, float]]:
    """Best k cross pairs of a sorted object list, scored d_i + d_j."""
    n = len(objects)
    if n < 2:
        return []
    heap = []
    for i in range(n - 1):
        (a, da), (b, db) = objects[i], objects[i + 1]
        heap.append((da + db, PairKey.of(a, b), i, i + 1))
    heapq.heapify(heap)
    out = []
    while heap:
        score, key, i, j = heapq.heappop(heap)
        if len(out) >= k and score > out[-1][1]:
            break
        out.append((key, score))
        if j + 1 < n:
            c, dc = objects[j + 1]
            heapq.heappush(heap, (objects[i][1] + dc, PairKey.of(objects[i][0], c), i, j + 1))
    out.sort(key=lambda e: (e[1], e[0]))
    return out[:k]


def merge_pair_lists(lists, k: int) -> list[tuple[PairKey, float]]:
    best: dict[PairKey, float] = {}
    for lst in lists:
        for key, d in lst:
            if d < best.get(key, math.inf):
                best[key] = d
    return [(key, d) for d, key in heapq.nsmallest(k, ((d, key) for key, d in best.items()))]


def mindist_topk(
    tree: OntologyTree,
    index: InvertedIndex,
    k: int,
    k_prime: int | None = None,
    check_bounds: bool = False,
) -> list[tuple[PairKey, float]]:
    """Top-k pairs by minimum term distance.

    ``k_prime`` is the object-list length kept per node (default ``k + 1``).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k_prime is None:
        k_prime = safe_k_prime(k)
    objs: dict[int, list[tuple[int, float]]] = {}
    pairs: dict[int, list[tuple[PairKey, float]]] = {}
    for node in tree.postorder():
        own = [(o, 0.0) for o in index[node][:k_prime]]
        obj_lists = [own]
        pair_lists = []
        for child in tree.children[node]:
            w = tree.edge_weight[child]
            obj_lists.append([(o, d + w) for o, d in objs.pop(child)])
            pair_lists.append(pairs.pop(child))
        merged = merge_object_lists(obj_lists, k_prime)
        pair_lists.append(gen_pairs(merged, k))
        merged_pairs = merge_pair_lists(pair_lists, k)
        if check_bounds:
            assert len(merged) <= k_prime and len(merged_pairs) <= k
        objs[node] = merged
        pairs[node] = merged_pairs
    return pairs[tree.root]

"""Reference O(N^2) distances and joins.

Only ``OntologyTree.distance_matrix`` and ``emd_exact`` are shared with the
optimized joins; no candidate generation is reused.
"""
from __future__ import annotations

import heapq

from .dataset import ObjectDescription, to_mass_vector
from .emd import emd_exact
from .ontology import OntologyTree
from .topk import PairKey

METRICS = ("min", "avg", "emd")


def min_distance(a: ObjectDescription, b: ObjectDescription, tree: OntologyTree) -> float:
    return float(tree.distance_matrix(a.terms, b.terms).min())


def avg_distance(a: ObjectDescription, b: ObjectDescription, tree: OntologyTree) -> float:
    total = float(tree.distance_matrix(a.terms, b.terms).sum())
    return total / (len(a.terms) * len(b.terms))


def emd_distance(a: ObjectDescription, b: ObjectDescription, tree: OntologyTree) -> float:
    return emd_exact(to_mass_vector(a), to_mass_vector(b), tree)[0]


_DISTANCES = {"min": min_distance, "avg": avg_distance, "emd": emd_distance}


def pair_distance(a: ObjectDescription, b: ObjectDescription, metric: str, tree: OntologyTree) -> float:
    try:
        fn = _DISTANCES[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}") from None
    return fn(a, b, tree)


def brute_topk(objects, metric: str, k: int, tree: OntologyTree) -> list[tuple[PairKey, float]]:
    """Evaluate every pair and keep the k best by (distance, key)."""
    if len(objects) < 2:
        raise ValueError("need at least two objects")
    if k < 1:
        raise ValueError("k must be >= 1")
    scored = []
    for i, a in enumerate(objects):
        for b in objects[i + 1:]:
            scored.append((pair_distance(a, b, metric, tree), PairKey.of(a.id, b.id)))
    best = heapq.nsmallest(k, scored)
    return [(key, d) for d, key in best]

"""Top-k similar pairs of ontology-annotated objects under minimum, average
and earth mover's distances."""
from __future__ import annotations

from dataclasses import asdict

from .avgdist import QueryStats, avgdist_query, build
from .dataset import GenConfig, ObjectDescription, generate, read_objects
from .mindist import mindist_topk
from .ontology import OntologyTree, build_inverted_index, build_tree, read_ontology
from .ta import JoinStats, topk_emd_join
from .topk import PairKey

__all__ = [
    "GenConfig",
    "ObjectDescription",
    "OntologyTree",
    "PairKey",
    "build_tree",
    "generate",
    "read_objects",
    "read_ontology",
    "top_k_pairs",
]

__version__ = "0.1.0"


def top_k_pairs(objects, tree, metric: str, k: int, variant: str = "next-estimate"):
    """Run the optimized join for ``metric``; returns ``(pairs, counters)``."""
    if metric == "emd":
        stats = JoinStats()
        pairs = topk_emd_join(objects, tree, k, stats)
        counters = asdict(stats)
        counters["eta"] = stats.eta
    elif metric == "min":
        if k < 1:
            raise ValueError("k must be >= 1")
        index = build_inverted_index(objects, tree.size)
        pairs = mindist_topk(tree, index, k)
        counters = {"nodes_visited": tree.size, "object_list_size": k + 1}
    elif metric == "avg":
        index = build_inverted_index(objects, tree.size)
        stores = build(tree, index)
        stats = QueryStats()
        pairs = avgdist_query(stores, k, variant, objects, stats)
        counters = asdict(stats)
        counters["eta"] = stats.eta
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return pairs, counters

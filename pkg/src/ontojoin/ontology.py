"""Rooted weighted ontology trees, term distances, height-1 reduction and
term -> object inverted lists."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class OntologyError(ValueError):
    """Malformed ontology or object input. ``term`` names the offending term."""

    def __init__(self, message: str, term: int | None = None):
        super().__init__(message)
        self.term = term


@dataclass(eq=False)
class OntologyTree:
    parent: list[int | None]
    edge_weight: list[float]
    children: list[list[int]]
    depth: list[int]
    root_distance: list[float]
    root: int
    labels: list[str] | None = None
    # Euler tour + sparse table for O(1) LCA queries
    _first: np.ndarray = field(default=None, repr=False)
    _table: list[np.ndarray] = field(default=None, repr=False)
    _log2: np.ndarray = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.parent)

    def label(self, term: int) -> str:
        return self.labels[term] if self.labels is not None else str(term)

    def term_id(self, label: str) -> int:
        if self.labels is None:
            return int(label)
        index = getattr(self, "_label_index", None)
        if index is None:
            index = {name: i for i, name in enumerate(self.labels)}
            self._label_index = index
        try:
            return index[label]
        except KeyError:
            raise OntologyError(f"unknown term label {label!r}") from None

    def _check(self, term: int) -> None:
        if not 0 <= term < self.size:
            raise IndexError(f"term id {term} out of range [0, {self.size})")

    def lca(self, a: int, b: int) -> int:
        self._check(a)
        self._check(b)
        lo, hi = self._first[a], self._first[b]
        if lo > hi:
            lo, hi = hi, lo
        level = int(hi - lo + 1).bit_length() - 1
        row = self._table[level]
        x, y = int(row[lo]), int(row[hi - (1 << level) + 1])
        return x if self.depth[x] <= self.depth[y] else y

    def lca_many(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Vectorised LCA over equal-shaped integer arrays."""
        fa, fb = self._first[a], self._first[b]
        lo, hi = np.minimum(fa, fb), np.maximum(fa, fb)
        level = self._log2[hi - lo + 1]
        depth = np.asarray(self.depth)
        out = np.empty_like(lo)
        for lev in np.unique(level):
            mask = level == lev
            row = self._table[lev]
            x = row[lo[mask]]
            y = row[hi[mask] - (1 << int(lev)) + 1]
            out[mask] = np.where(depth[x] <= depth[y], x, y)
        return out

    def distance(self, a: int, b: int) -> float:
        """Length of the unique path between two terms."""
        if a == b:
            self._check(a)
            return 0.0
        c = self.lca(a, b)
        rd = self.root_distance
        return rd[a] + rd[b] - 2.0 * rd[c]

    def distance_matrix(self, terms_a: Sequence[int], terms_b: Sequence[int]) -> np.ndarray:
        """Pairwise term distances, shape (len(terms_a), len(terms_b))."""
        a = np.asarray(terms_a, dtype=np.int64)
        b = np.asarray(terms_b, dtype=np.int64)
        aa, bb = np.meshgrid(a, b, indexing="ij")
        c = self.lca_many(aa.ravel(), bb.ravel()).reshape(aa.shape)
        rd = np.asarray(self.root_distance)
        out = rd[aa] + rd[bb] - 2.0 * rd[c]
        out[aa == bb] = 0.0
        return out

    def path_to_root(self, term: int) -> list[int]:
        path = [term]
        while self.parent[path[-1]] is not None:
            path.append(self.parent[path[-1]])
        return path

    def postorder(self) -> list[int]:
        order, stack = [], [(self.root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            stack.append((node, True))
            for child in reversed(self.children[node]):
                stack.append((child, False))
        return order


def term_distance(tree: OntologyTree, a: int, b: int) -> float:
    return tree.distance(a, b)


def build_tree(
    edges: Iterable[tuple[int, int, float]],
    n_terms: int | None = None,
    labels: list[str] | None = None,
) -> OntologyTree:
    """Build an :class:`OntologyTree` from ``(child, parent, weight)`` edges.

    Term ids must be contiguous in ``[0, n_terms)``. When ``n_terms`` is not
    given it is inferred from the largest id seen (a tree with no edges has a
    single term).
    """
    edges = list(edges)
    if n_terms is None:
        n_terms = 1 + max((max(c, p) for c, p, _ in edges), default=0)
    if n_terms < 1:
        raise OntologyError("ontology must contain at least one term")

    parent: list[int | None] = [None] * n_terms
    weight = [0.0] * n_terms
    for child, par, w in edges:
        for t in (child, par):
            if not 0 <= t < n_terms:
                raise OntologyError(f"term {t} outside contiguous id range [0, {n_terms})", t)
        if child == par:
            raise OntologyError(f"cycle detected: term {child} is its own parent", child)
        if parent[child] is not None:
            raise OntologyError(f"duplicate parent assignment for term {child}", child)
        if not w > 0:
            raise OntologyError(f"non-positive weight {w} on edge of term {child}", child)
        parent[child] = par
        weight[child] = float(w)

    roots = [t for t in range(n_terms) if parent[t] is None]
    if not roots:
        raise OntologyError("cycle detected through term 0: no root term", 0)
    children: list[list[int]] = [[] for _ in range(n_terms)]
    for child, par, _ in edges:
        children[par].append(child)

    if len(roots) > 1:
        # Pick the root that reaches most nodes; everything else is disconnected.
        root = max(roots, key=lambda r: _reach(children, r))
    else:
        root = roots[0]

    depth = [-1] * n_terms
    rdist = [0.0] * n_terms
    depth[root] = 0
    stack = [root]
    while stack:
        node = stack.pop()
        for child in children[node]:
            depth[child] = depth[node] + 1
            rdist[child] = rdist[node] + weight[child]
            stack.append(child)
    unreached = [t for t in range(n_terms) if depth[t] < 0]
    if unreached:
        t = unreached[0]
        seen = set()
        x = t
        while x is not None and x not in seen:
            seen.add(x)
            x = parent[x]
        if x is not None:
            raise OntologyError(f"cycle detected through term {x}", x)
        raise OntologyError(f"disconnected node: term {t} does not reach root {root}", t)

    tree = OntologyTree(
        parent=parent,
        edge_weight=weight,
        children=children,
        depth=depth,
        root_distance=rdist,
        root=root,
        labels=labels,
    )
    _index_lca(tree)
    return tree


def _reach(children, root) -> int:
    count, stack, seen = 0, [root], {root}
    while stack:
        node = stack.pop()
        count += 1
        for c in children[node]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return count


def _index_lca(tree: OntologyTree) -> None:
    n = tree.size
    euler: list[int] = []
    first = [0] * n
    stack = [(tree.root, 0)]
    while stack:
        node, i = stack.pop()
        if i == 0:
            first[node] = len(euler)
        euler.append(node)
        kids = tree.children[node]
        if i < len(kids):
            stack.append((node, i + 1))
            stack.append((kids[i], 0))
    euler_arr = np.asarray(euler, dtype=np.int64)
    depth = np.asarray(tree.depth, dtype=np.int64)
    table = [euler_arr]
    span = 1
    while 2 * span <= len(euler_arr):
        prev = table[-1]
        x, y = prev[:-span], prev[span:]
        table.append(np.where(depth[x] <= depth[y], x, y))
        span *= 2
    log2 = np.zeros(len(euler_arr) + 1, dtype=np.int64)
    for i in range(2, len(log2)):
        log2[i] = log2[i >> 1] + 1
    tree._first = np.asarray(first, dtype=np.int64)
    tree._table = table
    tree._log2 = log2


@dataclass(frozen=True)
class ReductionMap:
    map: tuple[int, ...]
    retained: tuple[int, ...]

    def __call__(self, term: int) -> int:
        return self.map[term]


def reduce_at_height_one(tree: OntologyTree) -> ReductionMap:
    """Prune the tree below the root's children; each deleted term maps to
    its retained ancestor."""
    mapping = [tree.root] * tree.size
    retained = [tree.root] + list(tree.children[tree.root])
    for top in tree.children[tree.root]:
        stack = [top]
        while stack:
            node = stack.pop()
            mapping[node] = top
            stack.extend(tree.children[node])
    return ReductionMap(tuple(mapping), tuple(retained))


class InvertedIndex:
    """Per-term lists of object ids, in ascending object order."""

    def __init__(self, lists: list[list[int]]):
        self.lists = lists

    def __getitem__(self, term: int) -> list[int]:
        return self.lists[term]

    def __len__(self) -> int:
        return len(self.lists)


def build_inverted_index(objects, n_terms: int) -> InvertedIndex:
    lists: list[list[int]] = [[] for _ in range(n_terms)]
    for obj in objects:
        for t in obj.terms:
            if not 0 <= t < n_terms:
                raise OntologyError(f"object {obj.id}: term id {t} out of range [0, {n_terms})")
            lists[t].append(obj.id)
    return InvertedIndex(lists)


def read_ontology(path) -> OntologyTree:
    """Parse a ``child<TAB>parent<TAB>weight`` edge file.

    Labels get dense ids in order of first appearance. The label that never
    appears as a child is the root.
    """
    ids: dict[str, int] = {}
    labels: list[str] = []
    edges = []

    def intern(name: str) -> int:
        if name not in ids:
            ids[name] = len(labels)
            labels.append(name)
        return ids[name]

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise OntologyError(f"{path}:{lineno}: expected child<TAB>parent<TAB>weight")
            child, par, w = parts
            try:
                weight = float(w)
            except ValueError:
                raise OntologyError(f"{path}:{lineno}: bad weight {w!r}") from None
            edges.append((intern(child.strip()), intern(par.strip()), weight, lineno))
    if not edges:
        raise OntologyError(f"{path}: no edges found")
    try:
        return build_tree([e[:3] for e in edges], len(labels), labels)
    except OntologyError as exc:
        if exc.term is None:
            raise OntologyError(f"{path}: {exc}") from None
        term = exc.term
        as_child = [ln for c, _, _, ln in edges if c == term]
        if "duplicate parent" in str(exc) and len(as_child) > 1:
            lineno = as_child[1]
        elif as_child:
            lineno = as_child[0]
        else:
            lineno = next(ln for _, p, _, ln in edges if p == term)
        msg = str(exc).replace(f"term {term}", f"term {labels[term]!r}")
        raise OntologyError(f"{path}:{lineno}: {msg}", term) from None


def write_ontology(tree: OntologyTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# child\tparent\tweight\n")
        for node in range(tree.size):
            par = tree.parent[node]
            if par is None:
                continue
            fh.write(f"{tree.label(node)}\t{tree.label(par)}\t{tree.edge_weight[node]!r}\n")

"""Earth mover's distance on ontology trees.

``emd_exact`` solves the balanced transportation problem with the primal
transportation simplex (north-west corner start, MODI pricing). The tree
closed form ``emd_tree_closed_form`` is kept as an independent check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import MassVector, check_normalized
from .ontology import OntologyTree

PERTURB_EPS = 1e-12


@dataclass
class Flow:
    sources: list[int]
    sinks: list[int]
    flows: list[tuple[int, int, float]]  # (p, q, f_pq), p/q index sources/sinks
    objective: float

    def row_sums(self) -> np.ndarray:
        out = np.zeros(len(self.sources))
        for p, _, f in self.flows:
            out[p] += f
        return out

    def col_sums(self) -> np.ndarray:
        out = np.zeros(len(self.sinks))
        for _, q, f in self.flows:
            out[q] += f
        return out


class TransportError(RuntimeError):
    pass


def _northwest_corner(s: np.ndarray, d: np.ndarray):
    m, n = len(s), len(d)
    s, d = s.copy(), d.copy()
    flow = np.zeros((m, n))
    basis = []
    i = j = 0
    while True:
        x = min(s[i], d[j])
        flow[i, j] = x
        basis.append((i, j))
        s[i] -= x
        d[j] -= x
        if i == m - 1 and j == n - 1:
            break
        # move exactly one index per step so the basis stays a spanning tree
        if j == n - 1 or (i < m - 1 and s[i] <= d[j]):
            i += 1
        else:
            j += 1
    return flow, basis


def _potentials(cost, basis, m, n):
    adj = [[] for _ in range(m + n)]
    for i, j in basis:
        adj[i].append(m + j)
        adj[m + j].append(i)
    pot = [None] * (m + n)
    pot[0] = 0.0
    stack = [0]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if pot[y] is None:
                if x < m:
                    pot[y] = cost[x, y - m] - pot[x]
                else:
                    pot[y] = cost[y, x - m] - pot[x]
                stack.append(y)
    return np.array(pot[:m]), np.array(pot[m:]), adj


def _tree_path(adj, start, goal):
    prev = {start: None}
    stack = [start]
    while stack:
        x = stack.pop()
        if x == goal:
            break
        for y in adj[x]:
            if y not in prev:
                prev[y] = x
                stack.append(y)
    path = [goal]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path  # goal ... start


def _basis_flows(basis, supply, demand):
    """Basic flows for given marginals on a spanning-tree basis (leaf peeling)."""
    m, n = len(supply), len(demand)
    rest = np.concatenate([supply, demand]).astype(float)
    incident = [set() for _ in range(m + n)]
    for idx, (i, j) in enumerate(basis):
        incident[i].add(idx)
        incident[m + j].add(idx)
    flows = np.zeros(len(basis))
    leaves = [x for x in range(m + n) if len(incident[x]) == 1]
    done = [False] * len(basis)
    while leaves:
        x = leaves.pop()
        if len(incident[x]) != 1:
            continue
        idx = incident[x].pop()
        done[idx] = True
        i, j = basis[idx]
        other = m + j if x == i else i
        f = rest[x]
        flows[idx] = f
        rest[other] -= f
        rest[x] = 0.0
        incident[other].discard(idx)
        if len(incident[other]) == 1:
            leaves.append(other)
    return flows


def transport_simplex(supply, demand, cost, max_iter: int = 10_000):
    """Solve min sum c_pq f_pq over a balanced transportation polytope.

    Returns ``(objective, basis, flows)``; ``flows`` aligns with ``basis``.
    Supplies are perturbed by ``PERTURB_EPS`` during pivoting to avoid
    degenerate cycling; final flows are recomputed from the unperturbed
    marginals on the optimal basis.
    """
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    cost = np.asarray(cost, dtype=float)
    m, n = len(supply), len(demand)
    if cost.shape != (m, n):
        raise ValueError(f"cost matrix shape {cost.shape} != ({m}, {n})")

    s = supply + PERTURB_EPS
    d = demand.copy()
    d[-1] += m * PERTURB_EPS
    flow, basis = _northwest_corner(s, d)
    tol = 1e-12 * max(1.0, float(cost.max(initial=0.0)))

    for _ in range(max_iter):
        u, v, adj = _potentials(cost, basis, m, n)
        reduced = cost - u[:, None] - v[None, :]
        for i, j in basis:
            reduced[i, j] = 0.0
        flat = int(np.argmin(reduced))
        ei, ej = divmod(flat, n)
        if reduced[ei, ej] >= -tol:
            break
        path = _tree_path(adj, ei, m + ej)  # col ej ... row ei
        cells = []
        for a, b in zip(path, path[1:]):
            cells.append((b, a - m) if a >= m else (a, b - m))
        minus = cells[0::2]
        plus = cells[1::2]
        theta = min(flow[c] for c in minus)
        leave = next(c for c in minus if flow[c] == theta)
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[ei, ej] += theta
        basis.remove(leave)
        basis.append((ei, ej))
        flow[leave] = 0.0
    else:
        raise TransportError("transportation simplex did not converge")

    exact = _basis_flows(basis, supply, demand)
    exact[(exact < 0) & (exact > -1e-9)] = 0.0
    if (exact < 0).any():
        raise TransportError("negative flow after removing perturbation")
    objective = float(sum(cost[i, j] * f for (i, j), f in zip(basis, exact)))
    return objective, basis, exact


def emd_exact(a: MassVector, b: MassVector, tree: OntologyTree) -> tuple[float, Flow]:
    """Exact EMD between two normalized mass vectors under tree distances."""
    check_normalized(a)
    check_normalized(b)
    src = sorted(a)
    dst = sorted(b)
    cost = tree.distance_matrix(src, dst)
    objective, basis, flows = transport_simplex([a[t] for t in src], [b[t] for t in dst], cost)
    kept = [(i, j, float(f)) for (i, j), f in zip(basis, flows) if f > 0]
    return objective, Flow(src, dst, kept, objective)


def emd(a: MassVector, b: MassVector, tree: OntologyTree) -> float:
    return emd_exact(a, b, tree)[0]


def emd_tree_closed_form(a: MassVector, b: MassVector, tree: OntologyTree) -> float:
    """Sum over edges of weight times the subtree mass imbalance."""
    diff: dict[int, float] = {}
    for sign, vec in ((1.0, a), (-1.0, b)):
        for term, mass in vec.items():
            x = term
            while x is not None:
                diff[x] = diff.get(x, 0.0) + sign * mass
                x = tree.parent[x]
    w = tree.edge_weight
    return float(sum(w[x] * abs(delta) for x, delta in diff.items() if x != tree.root))


def l1_half(a: MassVector, b: MassVector, scale: float = 1.0) -> float:
    """``scale * sum |a - b| / 2``; a lower bound on EMD when ``scale`` is at
    most the smallest ground distance between distinct support terms."""
    total = 0.0
    for term, mass in a.items():
        total += abs(mass - b.get(term, 0.0))
    for term, mass in b.items():
        if term not in a:
            total += mass
    return scale * total / 2.0


def full_bound_scale(tree: OntologyTree) -> float:
    """Smallest distance between two distinct terms: the lightest edge."""
    weights = [w for x, w in enumerate(tree.edge_weight) if x != tree.root]
    return min(weights, default=1.0)


def reduced_bound_scale(tree: OntologyTree) -> float:
    """Smallest distance between two distinct retained (height <= 1) terms."""
    weights = [tree.edge_weight[c] for c in tree.children[tree.root]]
    return min(weights, default=1.0)

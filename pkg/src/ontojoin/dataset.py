"""Object descriptions, mass vectors, file IO and the synthetic generator."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .ontology import OntologyError, OntologyTree, ReductionMap, build_tree, write_ontology

MASS_TOL = 1e-9


@dataclass(frozen=True)
class ObjectDescription:
    id: int
    terms: tuple[int, ...]
    label: str | None = None

    def __post_init__(self):
        if not self.terms:
            raise ValueError(f"object {self.id} has an empty description")
        if any(b <= a for a, b in zip(self.terms, self.terms[1:])):
            raise ValueError(f"object {self.id}: terms must be strictly increasing")

    @classmethod
    def of(cls, oid: int, terms, label: str | None = None) -> "ObjectDescription":
        return cls(oid, tuple(sorted(set(int(t) for t in terms))), label)

    @property
    def name(self) -> str:
        return self.label if self.label is not None else f"O{self.id}"

    def __len__(self) -> int:
        return len(self.terms)


# term -> mass; kept as a plain dict since supports are tiny
MassVector = dict


def to_mass_vector(obj: ObjectDescription) -> MassVector:
    if not obj.terms:
        raise ValueError("cannot build a mass vector from an empty description")
    m = 1.0 / len(obj.terms)
    return {t: m for t in obj.terms}


def reduce_mass_vector(v: MassVector, reduction: ReductionMap) -> MassVector:
    out: dict[int, float] = {}
    for term, mass in v.items():
        r = reduction.map[term]
        out[r] = out.get(r, 0.0) + mass
    return out


def check_normalized(v: MassVector) -> None:
    total = sum(v.values())
    if abs(total - 1.0) > MASS_TOL or any(m <= 0 for m in v.values()):
        raise ValueError(f"mass vector is not normalized (total={total!r})")


@dataclass(frozen=True)
class GenConfig:
    N: int
    T: int
    avg_branching: float = 8.0
    avg_terms_per_object: float = 7.0
    seed: int = 0
    weight_base: float = 1.0
    perturbation: float = 0.5

    def __post_init__(self):
        if self.N < 1 or self.T < 1:
            raise ValueError("N and T must be >= 1")
        if self.avg_branching < 1 or self.avg_terms_per_object < 1:
            raise ValueError("averages must be >= 1")
        if self.avg_terms_per_object > self.T:
            raise ValueError("avg_terms_per_object exceeds the number of terms")
        if self.weight_base <= 0:
            raise ValueError("weight_base must be positive")


def perturbed_range(avg: float, spread: float = 0.5) -> tuple[int, int]:
    """Integer range [ceil((1-spread)*avg), floor((1+spread)*avg)], clamped >= 1."""
    lo = max(1, math.ceil((1.0 - spread) * avg))
    hi = max(lo, math.floor((1.0 + spread) * avg))
    return lo, hi


def generate_tree(config: GenConfig, rng: np.random.Generator) -> OntologyTree:
    lo, hi = perturbed_range(config.avg_branching, config.perturbation)
    edges = []
    frontier = [(0, 0)]  # (term, level), breadth first
    head, next_id = 0, 1
    while next_id < config.T:
        node, level = frontier[head]
        head += 1
        count = min(int(rng.integers(lo, hi + 1)), config.T - next_id)
        w = config.weight_base * 2.0 ** (-level)
        for _ in range(count):
            edges.append((next_id, node, w))
            frontier.append((next_id, level + 1))
            next_id += 1
    labels = [f"t{i}" for i in range(config.T)]
    return build_tree(edges, config.T, labels)


def generate_objects(config: GenConfig, rng: np.random.Generator) -> list[ObjectDescription]:
    lo, hi = perturbed_range(config.avg_terms_per_object, config.perturbation)
    hi = min(hi, config.T)
    lo = min(lo, hi)
    objects = []
    for oid in range(config.N):
        m = int(rng.integers(lo, hi + 1))
        terms = rng.choice(config.T, size=m, replace=False)
        objects.append(ObjectDescription.of(oid, terms.tolist(), f"O{oid + 1}"))
    return objects


def generate(config: GenConfig) -> tuple[OntologyTree, list[ObjectDescription]]:
    """Random ontology and objects, deterministic in ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    tree = generate_tree(config, rng)
    return tree, generate_objects(config, rng)


def read_objects(path, tree: OntologyTree, dedup: bool = False) -> list[ObjectDescription]:
    """Parse ``label<TAB>term,term,...`` lines against ``tree``'s label table."""
    objects: list[ObjectDescription] = []
    seen: set[tuple[int, ...]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise OntologyError(f"{path}:{lineno}: expected object_label<TAB>term,term,...")
            label, terms = parts[0].strip(), [t.strip() for t in parts[1].split(",") if t.strip()]
            if not terms:
                raise OntologyError(f"{path}:{lineno}: object {label!r} has no terms")
            try:
                ids = [tree.term_id(t) for t in terms]
            except OntologyError as exc:
                raise OntologyError(f"{path}:{lineno}: {exc}") from None
            key = tuple(sorted(set(ids)))
            if dedup:
                if key in seen:
                    continue
                seen.add(key)
            objects.append(ObjectDescription(len(objects), key, label))
    return objects


def write_objects(objects, tree: OntologyTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(obj.name + "\t" + ",".join(tree.label(t) for t in obj.terms) + "\n")


def write_dataset(tree, objects, config: GenConfig, outdir) -> dict[str, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "ontology": outdir / "ontology.tsv",
        "objects": outdir / "objects.tsv",
        "config": outdir / "config.json",
    }
    write_ontology(tree, paths["ontology"])
    write_objects(objects, tree, paths["objects"])
    lo_b, hi_b = perturbed_range(config.avg_branching, config.perturbation)
    lo_t, hi_t = perturbed_range(config.avg_terms_per_object, config.perturbation)
    sidecar = {
        "config": asdict(config),
        "branching_range": [lo_b, hi_b],
        "terms_per_object_range": [lo_t, min(hi_t, config.T)],
        "edge_weight": "weight_base * 2**(-parent_level)",
    }
    paths["config"].write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return paths

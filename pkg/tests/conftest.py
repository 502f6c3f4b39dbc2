from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from ontojoin.dataset import ObjectDescription
from ontojoin.ontology import build_tree

DATA = Path(__file__).parent / "data"

# small example: t1..t3 under the root at 1.0, deeper edges at 0.5
TOY_EDGES = [
    (1, 0, 1.0), (2, 0, 1.0), (3, 0, 1.0),
    (4, 1, 0.5), (5, 1, 0.5),
    (6, 2, 0.5), (7, 2, 0.5), (8, 2, 0.5),
    (9, 3, 0.5),
]
TOY_OBJECTS = [[1, 7], [0, 1, 4, 5], [2, 3, 9], [6, 8]]

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def toy_tree():
    return build_tree(TOY_EDGES, 10, [f"t{i}" for i in range(10)])


@pytest.fixture
def toy_objects():
    return [ObjectDescription.of(i, ts, f"O{i + 1}") for i, ts in enumerate(TOY_OBJECTS)]


@pytest.fixture
def toy_files():
    return DATA / "toy_ontology.tsv", DATA / "toy_objects.tsv"


def random_tree(rng: np.random.Generator, n_terms: int, weights=(1.0, 0.5, 0.25, 2.0, 0.3)):
    edges = [(c, int(rng.integers(0, c)), float(rng.choice(weights))) for c in range(1, n_terms)]
    return build_tree(edges, n_terms)


def random_mass(rng: np.random.Generator, n_terms: int, max_support: int = 10) -> dict:
    size = int(rng.integers(1, min(max_support, n_terms) + 1))
    terms = rng.choice(n_terms, size=size, replace=False)
    w = rng.random(size) + 0.05
    w /= w.sum()
    return {int(t): float(m) for t, m in zip(terms, w)}


def distance_multiset(pairs, ndigits: int = 9) -> list[float]:
    return sorted(round(d, ndigits) for _, d in pairs)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

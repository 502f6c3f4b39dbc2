"""Acceptance criteria, one test each. Every test records a PASS/FAIL line
that is echoed in the terminal summary (and printed under ``-s``)."""
import itertools
import statistics
import subprocess
import sys
import time
from collections import defaultdict

import numpy as np
import pytest

from ontojoin import top_k_pairs
from ontojoin.avgdist import QueryStats, avgdist_query, build
from ontojoin.bruteforce import avg_distance, brute_topk, pair_distance
from ontojoin.dataset import GenConfig, generate, reduce_mass_vector, to_mass_vector
from ontojoin.emd import emd, emd_tree_closed_form, full_bound_scale, l1_half, reduced_bound_scale
from ontojoin.mindist import mindist_topk
from ontojoin.ontology import build_inverted_index, build_tree, reduce_at_height_one
from ontojoin.ta import DimensionStream, JoinStats, topk_emd_join

from conftest import ACCEPTANCE_LINES, distance_multiset, random_mass, random_tree


def report(num, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


TOY_TABLES = {
    "min": {(0, 1): 0.0, (0, 2): 0.5, (0, 3): 1.0, (1, 2): 1.0, (1, 3): 1.5, (2, 3): 0.5},
    "avg": {(0, 1): 1.5, (0, 2): 2.08, (0, 3): 1.75, (1, 2): 2.17, (1, 3): 2.5, (2, 3): 2.0},
    "emd": {(0, 1): 1.25, (0, 2): 1.75, (0, 3): 1.75, (1, 2): 2.17, (1, 3): 2.5, (2, 3): 2.0},
}
TOY_REDUCED = [
    {1: 1 / 2, 2: 1 / 2},
    {0: 1 / 4, 1: 3 / 4},
    {2: 1 / 3, 3: 2 / 3},
    {2: 1.0},
]


def test_criterion_1_golden_values(toy_tree, toy_objects):
    start = time.perf_counter()
    bad = []
    for metric, table in TOY_TABLES.items():
        for (i, j), expected in table.items():
            got = pair_distance(toy_objects[i], toy_objects[j], metric, toy_tree)
            if abs(got - expected) > 0.005:
                bad.append(f"{metric}({i},{j})={got:.4f}")
    red = reduce_at_height_one(toy_tree)
    for obj, expected in zip(toy_objects, TOY_REDUCED):
        got = reduce_mass_vector(to_mass_vector(obj), red)
        # exact: compare as fractions of the object size
        n = len(obj.terms)
        if {t: round(m * n, 12) for t, m in got.items()} != {t: round(m * n, 12) for t, m in expected.items()}:
            bad.append(f"reduced {obj.name}={got}")
    elapsed = time.perf_counter() - start
    report(1, "golden example values", not bad and elapsed < 1.0,
           f"18 pair values + 4 reduced vectors, {len(bad)} mismatches {bad[:3]}, {elapsed:.3f}s")


def _instance(rng, max_n, max_t, max_terms=5):
    N = int(rng.integers(2, max_n + 1))
    T = int(rng.integers(4, max_t + 1))
    cfg = GenConfig(N=N, T=T, avg_branching=float(rng.integers(2, 7)),
                    avg_terms_per_object=float(rng.integers(1, min(max_terms, T) + 1)),
                    seed=int(rng.integers(2**31)))
    return generate(cfg)


# (instances, max N, max T) per metric
ORACLE_PLAN = {"emd": (200, 60, 60), "min": (500, 100, 100), "avg": (300, 80, 120)}


def test_criterion_2_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    failures = []
    for metric, (count, max_n, max_t) in ORACLE_PLAN.items():
        for idx in range(count):
            tree, objects = _instance(rng, max_n, max_t)
            k = (1, 5, 10)[idx % 3]
            fast, _ = top_k_pairs(objects, tree, metric, k)
            slow = brute_topk(objects, metric, k, tree)
            a, b = distance_multiset(fast, 12), distance_multiset(slow, 12)
            if len(a) != len(b) or not np.allclose(a, b, rtol=0, atol=1e-9):
                failures.append((metric, idx))
    elapsed = time.perf_counter() - start
    total = sum(c for c, _, _ in ORACLE_PLAN.values())
    report(2, "optimized joins equal brute force", not failures and elapsed < 300,
           f"{total} instances (emd 200, min 500, avg 300), {len(failures)} mismatches {failures[:3]}, {elapsed:.1f}s")


def test_criterion_3_emd_cross_check():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        T = int(rng.integers(2, 101))
        tree = random_tree(rng, T)
        a, b = random_mass(rng, T), random_mass(rng, T)
        worst = max(worst, abs(emd(a, b, tree) - emd_tree_closed_form(a, b, tree)))
    elapsed = time.perf_counter() - start
    report(3, "simplex EMD equals tree closed form", worst <= 1e-6 and elapsed < 60,
           f"1000 pairs, max |diff| = {worst:.2e}, {elapsed:.1f}s")


def test_criterion_4_lower_bound_chain():
    """Two settings. With every edge at 1.0 all distinct terms are >= 1 apart,
    so the unscaled chain must hold. With generator weights (root edges 1.0,
    halving per level) the cascade uses bounds scaled by the smallest distance
    each one may rely on, and that chain must hold."""
    rng = np.random.default_rng(4)
    unit_viol = scaled_viol = raw_reduced_viol = raw_full_over = pairs = 0
    for seed in range(60):
        T = int(rng.integers(5, 150))
        unit = build_tree([(c, int(rng.integers(0, c)), 1.0) for c in range(1, T)])
        _, objects = generate(GenConfig(N=20, T=T, avg_branching=3, avg_terms_per_object=min(5, T), seed=seed))
        gen_tree, gen_objects = generate(GenConfig(N=20, T=T, avg_branching=float(rng.integers(2, 8)),
                                                  avg_terms_per_object=min(5, T), seed=seed))
        for tree, objs in ((unit, objects), (gen_tree, gen_objects)):
            red = reduce_at_height_one(tree)
            full = [to_mass_vector(o) for o in objs]
            reduced = [reduce_mass_vector(v, red) for v in full]
            s_t, s_T = reduced_bound_scale(tree), full_bound_scale(tree)
            for i, j in itertools.combinations(range(len(objs)), 2):
                pairs += 1
                e = emd(full[i], full[j], tree)
                lt, lT = l1_half(reduced[i], reduced[j]), l1_half(full[i], full[j])
                if tree is unit:
                    unit_viol += not (lt <= lT + 1e-12 and lT <= e + 1e-12)
                else:
                    d1 = l1_half(reduced[i], reduced[j], s_t)
                    d2 = max(d1, l1_half(full[i], full[j], s_T))
                    scaled_viol += not (d1 <= d2 <= e + 1e-12)
                    raw_reduced_viol += not (lt <= lT + 1e-12 and lt <= e + 1e-12)
                    # informational: unscaled full L1 assumes terms >= 1 apart
                    raw_full_over += lT > e + 1e-12
    ok = unit_viol == scaled_viol == raw_reduced_viol == 0
    report(4, "L1-reduced/2 <= L1-full/2 <= EMD", ok,
           f"{pairs} pairs; unit weights {unit_viol} violations; generator weights: "
           f"scaled cascade {scaled_viol}, unscaled reduced bound {raw_reduced_viol} "
           f"(unscaled full L1 exceeds EMD on {raw_full_over} pairs, not used as a bound)")


def test_criterion_5_admissibility_and_monotonicity():
    rng = np.random.default_rng(5)
    bound_viol = mono_viol = stream_viol = estimates = 0
    for _ in range(60):
        tree, objects = _instance(rng, 40, 120)
        stores = build(tree, build_inverted_index(objects, tree.size))
        history = defaultdict(list)
        emitted = defaultdict(list)

        def trace(event, payload):
            if event == "emit":
                emitted[payload[0]].append(payload[1])
            else:
                history[payload.key].append(payload.bound)

        k = int(rng.integers(1, 16))
        avgdist_query(stores, k, "next-estimate", objects, trace=trace)
        for key, bounds in history.items():
            estimates += 1
            true = avg_distance(objects[key.lo], objects[key.hi], tree)
            bound_viol += max(bounds) > true + 1e-9
            mono_viol += any(b > c + 1e-12 for b, c in zip(bounds, bounds[1:]))
        stream_viol += sum(b != sorted(b) for b in emitted.values())

    drained = drain_viol = 0
    for seed in range(300):
        tree, objects = generate(GenConfig(N=int(rng.integers(2, 13)), T=40, avg_branching=3,
                                           avg_terms_per_object=3, seed=seed))
        red = reduce_at_height_one(tree)
        reduced = [reduce_mass_vector(to_mass_vector(o), red) for o in objects]
        for term in red.retained:
            column = [r.get(term, 0.0) for r in reduced]
            out = list(DimensionStream(column).drain())
            diffs = [d for _, d in out]
            complete = len({key for key, _ in out}) == len(out) == len(column) * (len(column) - 1) // 2
            drained += 1
            drain_viol += not (diffs == sorted(diffs) and complete)
    ok = bound_viol == mono_viol == stream_viol == drain_viol == 0
    report(5, "bounds admissible and monotone, streams ordered", ok,
           f"{estimates} pair estimates: {bound_viol} over true d_avg, {mono_viol} decreasing; "
           f"{stream_viol} unordered avg streams; {drained} drained TA streams, {drain_viol} bad")


def test_criterion_6_avg_pseudo_metric(toy_tree, toy_objects):
    rng = np.random.default_rng(6)
    worst = -np.inf
    triples = 0
    for seed in range(10):
        tree, objects = generate(GenConfig(N=50, T=150, avg_branching=4, avg_terms_per_object=4, seed=seed))
        for _ in range(100):
            a, b, c = (objects[i] for i in rng.choice(len(objects), 3))
            gap = avg_distance(c, a, tree) - avg_distance(a, b, tree) - avg_distance(b, c, tree)
            worst = max(worst, gap)
            triples += 1
    self_d = avg_distance(toy_objects[0], toy_objects[0], toy_tree)
    ok = worst <= 1e-9 and abs(self_d - 1.25) <= 1e-12
    report(6, "d_avg triangle inequality", ok,
           f"{triples} triples, max of d(c,a) - d(a,b) - d(b,c) = {worst:.2e}; d_avg(O1,O1) = {self_d}")


# sweep regime for the EMD pruning trend; see README for the measured regimes
ETA_CONFIG = dict(T=200, avg_branching=10, avg_terms_per_object=2)
ETA_SEEDS = 4


def test_criterion_7_pruning_trend():
    start = time.perf_counter()
    means = {}
    for N in (100, 150, 200, 250):
        etas = []
        for seed in range(ETA_SEEDS):
            tree, objects = generate(GenConfig(N=N, seed=seed, **ETA_CONFIG))
            stats = JoinStats()
            topk_emd_join(objects, tree, 10, stats)
            etas.append(stats.eta)
        means[N] = statistics.mean(etas)
    values = [means[n] for n in sorted(means)]
    below_one = all(v < 1.0 for v in values)
    non_increasing = all(a >= b for a, b in zip(values, values[1:]))
    soft = means[250] < 0.10
    within_2x = means[250] <= 0.20

    rng = np.random.default_rng(7)
    worse = instances = 0
    for _ in range(60):
        tree, objects = _instance(rng, 80, 120)
        stores = build(tree, build_inverted_index(objects, tree.size))
        k = int(rng.integers(1, 16))
        counts = []
        for variant in ("next-estimate", "complete"):
            stats = QueryStats()
            avgdist_query(stores, k, variant, objects, stats)
            counts.append(stats.exact_evaluations)
        worse += counts[0] > counts[1]
        instances += 1
    for N in (500, 1000):
        tree, objects = generate(GenConfig(N=N, T=2000, avg_branching=4, avg_terms_per_object=3, seed=N))
        stores = build(tree, build_inverted_index(objects, tree.size))
        counts = []
        for variant in ("next-estimate", "complete"):
            stats = QueryStats()
            avgdist_query(stores, 10, variant, objects, stats)
            counts.append(stats.exact_evaluations)
        worse += counts[0] > counts[1]
        instances += 1
    elapsed = time.perf_counter() - start
    ok = below_one and non_increasing and within_2x and worse == 0 and elapsed < 600
    eta_txt = ", ".join(f"N={n}: {v:.3f}" for n, v in means.items())
    report(7, "pruning effectiveness trend", ok,
           f"EMD eta ({eta_txt}); soft target eta(250) < 0.10 {'met' if soft else 'MISSED (within 2x)'}; "
           f"NextEstimate > Complete exact evaluations on {worse}/{instances} instances; {elapsed:.0f}s")


def _mindist_seconds(N, T, repeats=5):
    tree, objects = generate(GenConfig(N=N, T=T, avg_branching=8, avg_terms_per_object=7, seed=0))
    index = build_inverted_index(objects, tree.size)
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        mindist_topk(tree, index, 10)
        best = min(best, time.perf_counter() - start)
    return best


@pytest.mark.slow
def test_criterion_8_mindist_scaling():
    t_small = _mindist_seconds(100_000, 4000)
    t_double = _mindist_seconds(100_000, 8000)
    t_fewer = _mindist_seconds(10_000, 4000)
    ratio = t_double / t_small
    variation = abs(t_small - t_fewer) / t_fewer
    ok = ratio <= 2.5 and variation < 0.25
    report(8, "MinDist scales with T, not N", ok,
           f"k=10, query time after indexing (best of 5): N=1e5 T=4000 {t_small:.3f}s, T=8000 {t_double:.3f}s "
           f"(x{ratio:.2f}, limit 2.5); N=1e4 T=4000 {t_fewer:.3f}s (variation {variation:.1%}, limit 25%)")


def test_criterion_9_determinism(tmp_path):
    def cli(*args):
        return subprocess.run([sys.executable, "-m", "ontojoin.cli", *args], capture_output=True, check=True).stdout

    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        cli("gen", "--N", "120", "--T", "400", "--branching", "5", "--terms", "3", "--seed", "42", "--out", str(out))
        files = ["--ontology", str(out / "ontology.tsv"), "--objects", str(out / "objects.tsv")]
        blobs = [(out / f).read_bytes() for f in ("ontology.tsv", "objects.tsv", "config.json")]
        for metric in ("min", "avg", "emd"):
            blobs.append(cli("join", *files, "--metric", metric, "--k", "10", "--stats"))
        blobs.append(cli("join", *files, "--metric", "avg", "--k", "10", "--variant", "complete"))
        outputs.append(blobs)
    same = [a == b for a, b in zip(*outputs)]
    report(9, "byte-identical output for identical seeds", all(same),
           f"{sum(same)}/{len(same)} artifacts identical (generated files and CSV for every metric)")

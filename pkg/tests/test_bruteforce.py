import pytest

from ontojoin import top_k_pairs
from ontojoin.bruteforce import brute_topk, pair_distance
from ontojoin.topk import PairKey

# pairwise values on the toy example, rounded to two decimals
TOY = {
    "min": {(0, 1): 0.0, (0, 2): 0.5, (0, 3): 1.0, (1, 2): 1.0, (1, 3): 1.5, (2, 3): 0.5},
    "avg": {(0, 1): 1.5, (0, 2): 2.08, (0, 3): 1.75, (1, 2): 2.17, (1, 3): 2.5, (2, 3): 2.0},
    "emd": {(0, 1): 1.25, (0, 2): 1.75, (0, 3): 1.75, (1, 2): 2.17, (1, 3): 2.5, (2, 3): 2.0},
}


@pytest.mark.parametrize("metric", sorted(TOY))
def test_toy_pairwise_values(toy_tree, toy_objects, metric):
    for (i, j), expected in TOY[metric].items():
        d = pair_distance(toy_objects[i], toy_objects[j], metric, toy_tree)
        assert d == pytest.approx(expected, abs=0.005)


def test_avg_self_distances(toy_tree, toy_objects):
    got = [pair_distance(o, o, "avg", toy_tree) for o in toy_objects]
    assert got == pytest.approx([1.25, 0.75, 1.11, 0.50], abs=0.005)


def test_unknown_metric(toy_tree, toy_objects):
    with pytest.raises(ValueError):
        pair_distance(toy_objects[0], toy_objects[1], "max", toy_tree)


def test_brute_topk_examples(toy_tree, toy_objects):
    assert brute_topk(toy_objects, "min", 1, toy_tree)[0][1] == 0.0
    assert brute_topk(toy_objects, "avg", 1, toy_tree)[0][1] == pytest.approx(1.5)
    everything = brute_topk(toy_objects, "emd", 50, toy_tree)
    assert len(everything) == 6
    assert [(d, k) for k, d in everything] == sorted((d, k) for k, d in everything)
    with pytest.raises(ValueError):
        brute_topk(toy_objects[:1], "min", 1, toy_tree)


@pytest.mark.parametrize("metric", ["min", "avg", "emd"])
def test_top_k_pairs_facade(toy_tree, toy_objects, metric):
    pairs, counters = top_k_pairs(toy_objects, toy_tree, metric, 6)
    assert [round(d, 2) for _, d in pairs] == sorted(TOY[metric].values())
    assert isinstance(counters, dict)
    with pytest.raises(ValueError):
        top_k_pairs(toy_objects, toy_tree, "cosine", 1)
    assert top_k_pairs(toy_objects, toy_tree, metric, 1)[0][0][0] == PairKey(0, 1)

from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gspoisson.matroid import (GraphicMatroid, OracleMatroid, PartitionMatroid, StructureError,
                               UniformMatroid, base_exchange_map, enumerate_bases,
                               greedy_max_weight_base, uniform_random_base,
                               verify_matroid_axioms)

K4_EDGES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
CYCLE4_EDGES = [(0, 1), (1, 2), (2, 3), (3, 0)]


def partitions(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    labels = draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    parts = [[e for e in range(n) if labels[e] == j] for j in sorted(set(labels))]
    bounds = [draw(st.integers(1, len(p))) for p in parts]
    return PartitionMatroid(parts, bounds)


partition_st = st.composite(partitions)


def test_greedy_simple_partition_picks_per_part_max():
    P = PartitionMatroid([[0, 2], [1]])
    assert greedy_max_weight_base(P, [1, 2, 3]) == {2, 1}


def test_greedy_ties_choose_smallest_ids():
    P = PartitionMatroid([[0, 1, 2], [3, 4]], [2, 1])
    assert greedy_max_weight_base(P, [1.0] * 5) == {0, 1, 3}


def test_greedy_uniform_matroid_top_two():
    assert greedy_max_weight_base(UniformMatroid(3, 2), [5, 1, 4]) == {0, 2}


def test_greedy_accepts_negative_weights():
    U = UniformMatroid(3, 2)
    assert len(greedy_max_weight_base(U, [-1, -2, -3])) == 2


def test_greedy_reports_rank_mismatch():
    M = OracleMatroid(range(3), lambda S: len(S) <= 1, rank_hint=2)
    with pytest.raises(StructureError):
        greedy_max_weight_base(M, [1, 2, 3])


@pytest.mark.parametrize("matroid", [GraphicMatroid(K4_EDGES), GraphicMatroid(CYCLE4_EDGES),
                                     UniformMatroid(6, 3)])
def test_greedy_is_optimal_by_enumeration(matroid):
    rng = np.random.default_rng(3)
    for _ in range(20):
        w = rng.normal(size=len(matroid.ground))
        best = max(sum(w[e] for e in B) for B in enumerate_bases(matroid))
        got = greedy_max_weight_base(matroid, w)
        assert matroid.is_base(got)
        assert sum(w[e] for e in got) == pytest.approx(best)


@settings(max_examples=40, deadline=None)
@given(partition_st(), st.integers(0, 2**31))
def test_greedy_partition_matches_generic(P, seed):
    w = np.random.default_rng(seed).integers(-3, 4, size=len(P.ground)).astype(float)
    assert greedy_max_weight_base(P, w) == greedy_max_weight_base(P.as_oracle(), w)


def test_exchange_identity():
    P = PartitionMatroid([[0, 2], [1]])
    assert base_exchange_map(P, {0, 1}, {0, 1}) == {0: 0, 1: 1}


def test_exchange_pairs_within_part():
    P = PartitionMatroid([[0, 2], [1]])
    assert base_exchange_map(P, {0, 1}, {2, 1}) == {0: 2, 1: 1}


def test_exchange_rejects_non_bases():
    P = PartitionMatroid([[0, 2], [1]])
    with pytest.raises(ValueError):
        base_exchange_map(P, {0}, {2, 1})


@pytest.mark.parametrize("matroid", [GraphicMatroid(CYCLE4_EDGES), GraphicMatroid(K4_EDGES),
                                     PartitionMatroid([[0, 1, 2], [3, 4]], [2, 1]).as_oracle(),
                                     PartitionMatroid([[0, 1, 2], [3, 4]], [2, 1])])
def test_exchange_map_properties_exhaustive(matroid):
    bases = enumerate_bases(matroid)
    for B1 in bases:
        for B2 in bases:
            h = base_exchange_map(matroid, B1, B2)
            assert set(h) == set(B1) and set(h.values()) == set(B2)
            assert sum(1 for i in h if h[i] != i) == len(B1 - B2)
            for i in B1:
                assert matroid.is_base((B1 - {i}) | {h[i]})


def test_random_base_unique_when_forced(rng):
    P = PartitionMatroid([[0], [1], [2]])
    assert uniform_random_base(P, rng) == {0, 1, 2}
    Q = PartitionMatroid([[0, 1]], [2])
    assert uniform_random_base(Q, rng) == {0, 1}


def test_random_base_is_uniform_per_part():
    from scipy.stats import chisquare
    P = PartitionMatroid([[0, 2], [1]])
    rng = np.random.default_rng(99)
    draws = [uniform_random_base(P, rng) for _ in range(10_000)]
    with_e1 = sum(1 for B in draws if 0 in B)
    assert chisquare([with_e1, 10_000 - with_e1]).pvalue > 1e-3


def test_random_base_general_matroid_is_a_base(rng):
    M = GraphicMatroid(K4_EDGES)
    for _ in range(50):
        assert M.is_base(uniform_random_base(M, rng))


@settings(max_examples=30, deadline=None)
@given(partition_st())
def test_partition_matroids_pass_axioms(P):
    assert verify_matroid_axioms(P).passed


def test_graphic_k4_passes_axioms():
    assert verify_matroid_axioms(GraphicMatroid(K4_EDGES)).passed


def test_downward_closure_violation_detected():
    M = OracleMatroid(["a", "b"], lambda S: S in (frozenset(), frozenset("ab"), frozenset("b")))
    report = verify_matroid_axioms(M)
    assert not report.passed and "subsets" in report.violation


def test_exchange_violation_detected():
    # {0,1} and {2} are maximal but of different sizes
    indep = {frozenset(), frozenset({0}), frozenset({1}), frozenset({2}), frozenset({0, 1})}
    M = OracleMatroid(range(3), lambda S: S in indep)
    report = verify_matroid_axioms(M)
    assert not report.passed and "exchange" in report.violation


def test_axiom_check_refuses_large_ground():
    with pytest.raises(ValueError):
        verify_matroid_axioms(UniformMatroid(13, 2))


@settings(max_examples=25, deadline=None)
@given(partition_st(max_n=8))
def test_partition_fast_path_matches_generic_oracle(P):
    generic = OracleMatroid(P.ground, lambda S: all(
        sum(1 for e in S if e in part) <= b for part, b in zip(P.parts, P.bounds)))
    for size in range(len(P.ground) + 1):
        for S in combinations(P.ground, size):
            assert P.is_independent(S) == generic.is_independent(S)


def test_partition_structure_validation():
    with pytest.raises(StructureError):
        PartitionMatroid([[0, 1], [1, 2]])
    with pytest.raises(StructureError):
        PartitionMatroid([[0, 1]], [3])

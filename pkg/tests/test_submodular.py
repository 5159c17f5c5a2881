import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gspoisson.matroid import PartitionMatroid
from gspoisson.submodular import (CoverageFunction, ExtensionOracle, FunctionOracle,
                                  ModularFunction, ScaledBasePoint, exact_multilinear,
                                  gradient_at_scaled_base, marginals_to_opt_ratio,
                                  sample_marginal)


def full_enumeration(f, x):
    """Definition of F summed over every subset of the ground set."""
    ground = list(f.ground)
    total = 0.0
    for size in range(len(ground) + 1):
        for S in combinations(ground, size):
            p = 1.0
            for e in ground:
                p *= x.get(e, 0.0) if e in S else 1.0 - x.get(e, 0.0)
            total += p * f.value(S)
    return total


def random_coverage(seed, n=6, items=5):
    rng = np.random.default_rng(seed)
    covers = [list(np.nonzero(rng.random(items) < 0.4)[0]) for _ in range(n)]
    return CoverageFunction(covers, rng.uniform(0, 2, size=items))


def test_multilinear_at_zero_is_empty_value():
    f = ModularFunction([1, 2, 3], offset=0.5)
    assert exact_multilinear(f, [0, 0, 0]) == 0.5


def test_multilinear_at_vertex_is_f(cov3w):
    assert exact_multilinear(cov3w, [1, 0, 1]) == cov3w.value({0, 2})


def test_multilinear_cov3_half_half(cov3):
    assert exact_multilinear(cov3, [0.5, 0.5, 0]) == pytest.approx(1.0)


def test_multilinear_refuses_large_support():
    f = ModularFunction([1.0] * 30)
    with pytest.raises(ValueError, match="exceeds"):
        exact_multilinear(f, [0.5] * 30)
    assert exact_multilinear(f, [0.5] * 4, cap=4) == pytest.approx(2.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.lists(st.sampled_from([0.0, 0.2, 0.5, 1.0, 0.9]),
                                        min_size=6, max_size=6))
def test_multilinear_matches_definition(seed, xs):
    f = random_coverage(seed)
    x = dict(enumerate(xs))
    assert exact_multilinear(f, x) == pytest.approx(full_enumeration(f, x), abs=1e-12)


def test_gradient_of_modular_is_weight():
    f = ModularFunction([1.5, 2.0, 0.25])
    for t in (0.1, 0.7, 1.0):
        for i in range(3):
            assert gradient_at_scaled_base(f, ScaledBasePoint(t, frozenset({0, 1})), i) == \
                pytest.approx(f.weights[i])


def test_gradient_cov3w_examples(cov3w):
    p = ScaledBasePoint(0.5, frozenset({0, 1}))
    assert gradient_at_scaled_base(cov3w, p, 2) == pytest.approx(1.5)
    assert gradient_at_scaled_base(cov3w, p, 0) == pytest.approx(1.0)
    assert gradient_at_scaled_base(cov3w, p, 1) == pytest.approx(2.0)


def test_gradient_uses_two_extension_queries(cov3w):
    F = ExtensionOracle(cov3w)
    gradient_at_scaled_base(F, ScaledBasePoint(0.3, frozenset({0, 1})), 2)
    assert F.queries == 2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_gradient_is_antitone(seed):
    # x <= y coordinatewise implies grad_i F(x) >= grad_i F(y)
    f = random_coverage(seed)
    rng = np.random.default_rng(seed)
    x = {e: float(v) for e, v in enumerate(rng.random(6) * 0.5)}
    y = {e: min(1.0, v + float(d)) for (e, v), d in zip(x.items(), rng.random(6) * 0.5)}
    for i in range(6):
        gx = exact_multilinear(f, {**x, i: 1.0}) - exact_multilinear(f, {**x, i: 0.0})
        gy = exact_multilinear(f, {**y, i: 1.0}) - exact_multilinear(f, {**y, i: 0.0})
        assert gx >= gy - 1e-12


def test_sample_marginal_modular_is_constant(rng):
    f = ModularFunction([1.0, 3.0, 2.0])
    p = ScaledBasePoint(0.4, frozenset({0, 1}))
    assert {sample_marginal(f, p, 2, rng) for _ in range(50)} == {2.0}


def test_sample_marginal_at_t_one_is_deterministic(cov3w, rng):
    p = ScaledBasePoint(1.0, frozenset({0, 1}))
    assert sample_marginal(cov3w, p, 2, rng) == cov3w.value({0, 1, 2}) - cov3w.value({0, 1})


def test_sample_marginal_uses_two_queries(cov3w, rng):
    before = cov3w.queries
    sample_marginal(cov3w, ScaledBasePoint(0.5, frozenset({0, 1})), 2, rng)
    assert cov3w.queries - before == 2


def test_sample_marginal_is_unbiased(cov3w):
    rng = np.random.default_rng(7)
    p = ScaledBasePoint(0.5, frozenset({0, 1}))
    draws = np.array([sample_marginal(cov3w, p, 2, rng) for _ in range(100_000)])
    se = draws.std(ddof=1) / math.sqrt(len(draws))
    assert abs(draws.mean() - 1.5) <= 3 * se


def test_query_counter_counts_each_call():
    calls = []
    f = FunctionOracle(range(3), lambda S: calls.append(S) or len(S))
    for S in ([], [0], [0, 1], [0]):
        f(S)
    assert f.queries == 4 == len(calls)
    f.value([1])
    assert f.queries == 4


def test_empty_value_is_cached(cov3w):
    cov3w.empty_value()
    cov3w.empty_value()
    assert cov3w.queries == 1


def test_marratio_examples(cov3w):
    P = PartitionMatroid([[0, 2], [1]])
    assert marginals_to_opt_ratio(cov3w, P, 3.0) == pytest.approx(5 / 3)
    assert marginals_to_opt_ratio(ModularFunction([1, 2, 3]), P, 5.0) == pytest.approx(1.0)
    assert marginals_to_opt_ratio(FunctionOracle(range(3), lambda S: 4.0), P, 2.0) == 0.0
    with pytest.raises(ValueError):
        marginals_to_opt_ratio(cov3w, P, 0.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_coverage_is_monotone_submodular(seed):
    f = random_coverage(seed, n=5)
    ground = list(f.ground)
    subsets = [frozenset(c) for r in range(6) for c in combinations(ground, r)]
    for S in subsets:
        for T in subsets:
            if S <= T:
                assert f.value(S) <= f.value(T) + 1e-12
                for i in ground:
                    if i not in T:
                        assert f.value(S | {i}) - f.value(S) >= f.value(T | {i}) - f.value(T) - 1e-12

"""Residual random greedy, checkpoints, preprocessing and the composed solvers."""

from __future__ import annotations

import math
import time
from collections.abc import Callable, Hashable, Iterable
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .matroid import PartitionMatroid
from .partition_swaps import (GeneralizedSwapF, GeneralizedSwapf, PartitionSwapF,
                              SimpleBanditSwap, build_reduced_instance, project, sample_size)
from .poisson import RunReport, run_gs_poisson
from .submodular import ExtensionOracle, ValueOracle

GAMMA = Fraction(1, 8)


@dataclass
class GreedyTrace:
    prefixes: list[frozenset]
    chosen_parts: list[int]
    values: list[float]
    value_queries: int

    @property
    def final(self) -> frozenset:
        return self.prefixes[-1]

    @property
    def final_value(self) -> float:
        return self.values[-1]


def residual_random_greedy(f: ValueOracle, partition: PartitionMatroid, delta: float,
                           rng: np.random.Generator) -> GreedyTrace:
    """Fill the residual capacity one element at a time from a sampled part."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    before = f.queries
    r, k = partition.rank, partition.k
    room = np.array(partition.bounds, dtype=float)
    P = frozenset()
    current = f(P)
    prefixes, parts, values = [P], [], [current]
    for step in range(r):
        j = int(rng.choice(k, p=room / (r - step)))
        pool = [e for e in partition.parts[j] if e not in P]
        size = sample_size(len(pool), int(room[j]), delta)
        X = [pool[x] for x in sorted(rng.choice(len(pool), size=size, replace=False))]
        best, best_value = None, -math.inf
        for e in X:
            v = f(P | {e})
            if v > best_value:
                best, best_value = e, v
        P = P | {best}
        current = best_value
        room[j] -= 1
        prefixes.append(P)
        parts.append(j)
        values.append(current)
    return GreedyTrace(prefixes, parts, values, f.queries - before)


def residual_value_V(f: ValueOracle, P: Iterable[Hashable], partition: PartitionMatroid,
                     base_value: float | None = None) -> float:
    """Per-part sum of the top residual-capacity singleton marginals above P."""
    P = frozenset(P)
    fP = f(P) if base_value is None else base_value
    total = 0.0
    for part, bound, used in zip(partition.parts, partition.bounds, partition.counts(P)):
        room = bound - used
        if room <= 0:
            continue
        gains = sorted((f(P | {e}) - fP for e in part if e not in P), reverse=True)
        total += sum(gains[:room])
    return total


@dataclass(frozen=True)
class CheckpointSet:
    k: int
    epsilon: Fraction
    indices: tuple[int, ...]

    @property
    def beta(self) -> Fraction:
        return 1 - self.epsilon / 4

    def successor(self, i: int) -> int:
        """Smallest checkpoint that is at least i."""
        return next(c for c in self.indices if c >= i)


def exact_fraction(x) -> Fraction:
    """Decimal literal value of a float (0.1 -> 1/10), exact for Fractions and ints."""
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    return Fraction(repr(float(x)))


@lru_cache(maxsize=64)
def _beta_powers(p: int, q: int, count: int) -> tuple[tuple[int, int], ...]:
    out, num, den = [], 1, 1
    for _ in range(count):
        out.append((num, den))
        num, den = num * p, den * q
    return tuple(out)


def checkpoint_set(k: int, epsilon) -> CheckpointSet:
    """{ceil(k (1 - beta^l)) : l >= 0} together with k, beta = 1 - epsilon/4, exactly."""
    eps = exact_fraction(epsilon)
    if k < 1 or not 0 < eps <= Fraction(1, 2):
        raise ValueError("need k >= 1 and 0 < epsilon <= 1/2")
    beta = 1 - eps / 4
    p, q = beta.numerator, beta.denominator
    found = {k}
    count = 64
    while True:
        for num, den in _beta_powers(p, q, count):
            c = -((-k * (den - num)) // den)  # exact ceiling of k (1 - num/den)
            found.add(c)
            if c == k:
                return CheckpointSet(k, eps, tuple(sorted(found)))
        count *= 2
        found = {k}


@dataclass
class ThresholdSearch:
    threshold: float
    index: int
    evaluations: int
    probes: dict = field(default_factory=dict)


class MonotonicityError(RuntimeError):
    pass


def find_threshold_index(V: Callable[[int], float], r: int, T: float, mode: str = "binary_over_all",
                         checkpoints: CheckpointSet | None = None,
                         tolerance: float = 1e-9) -> ThresholdSearch:
    """First index whose V value is at most T (binary search or checkpoint scan)."""
    if T < 0:
        raise ValueError("threshold must be non-negative")
    probes: dict[int, float] = {}

    def probe(i):
        v = V(i)
        for j, w in probes.items():
            if (j < i and w < v - tolerance) or (j > i and w > v + tolerance):
                raise MonotonicityError(f"V[{j}]={w} and V[{i}]={v} are not non-increasing")
        probes[i] = v
        return v

    if mode == "binary_over_all":
        lo, hi = 0, r
        while lo < hi:
            mid = (lo + hi) // 2
            if probe(mid) <= T:
                hi = mid
            else:
                lo = mid + 1
        return ThresholdSearch(T, lo, len(probes), probes)
    if mode == "checkpoint_scan":
        if checkpoints is None or checkpoints.k != r:
            raise ValueError("checkpoint scan needs a checkpoint set for the same r")
        for c in checkpoints.indices:
            if probe(c) <= T:
                return ThresholdSearch(T, c, len(probes), probes)
        raise MonotonicityError(f"V[{r}] exceeds the threshold {T}; V must end at 0")
    raise ValueError(f"unknown search mode {mode!r}")


def repetitions(epsilon: float) -> int:
    """ceil(log_{7/6}(8/epsilon))."""
    return math.ceil(math.log(8.0 / epsilon) / math.log(7.0 / 6.0) - 1e-12)


def derived_constant(delta: float, gamma: Fraction = GAMMA) -> float:
    """(e - 1) / ((1 - delta) * gamma)."""
    return (math.e - 1.0) / ((1.0 - delta) * float(gamma))


@dataclass
class PreprocessResult:
    P: frozenset
    approx: float
    threshold: float
    index: int
    trace: GreedyTrace
    repetitions: int
    value_queries: int


def fast_preprocess(f: ValueOracle, partition: PartitionMatroid, epsilon: float,
                    rng: np.random.Generator, rrg_delta: float | None = None) -> PreprocessResult:
    """Fix a greedy prefix P after which the singleton marginals are small."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    delta = epsilon if rrg_delta is None else rrg_delta
    before = f.queries
    reps = repetitions(epsilon)
    traces = [residual_random_greedy(f, partition, delta, rng) for _ in range(reps)]
    approx = max(tr.final_value for tr in traces)
    trace = traces[-1]
    T = derived_constant(delta) * approx
    r = partition.rank
    cache: dict[int, float] = {}

    def V(i):
        if i not in cache:
            cache[i] = residual_value_V(f, trace.prefixes[i], partition, trace.values[i])
        return cache[i]

    search = find_threshold_index(V, r, T, "checkpoint_scan", checkpoint_set(r, epsilon / 2))
    if not V(search.index) <= T:
        raise AssertionError("selected prefix exceeds the threshold")
    return PreprocessResult(trace.prefixes[search.index], approx, T, search.index, trace, reps,
                            f.queries - before)


class ResidualOracle(ValueOracle):
    """f_P(S) = f(P | S) - f(P); every query is also charged to f."""

    def __init__(self, f: ValueOracle, P: frozenset, ground: Iterable[Hashable]):
        super().__init__(ground)
        self.f = f
        self.P = P
        self.base_value = f(P)

    def _evaluate(self, S):
        return self.f.value(self.P | S) - self.base_value

    def __call__(self, S):
        self.f.charge(1)
        return super().__call__(S)

    def charge(self, count):
        self.f.charge(count)
        super().charge(count)


@dataclass
class ResidualInstance:
    P: frozenset
    f_P: ResidualOracle
    partition: PartitionMatroid | None
    surviving_parts: list[int]

    @property
    def empty(self) -> bool:
        return self.partition is None


def build_residual(f: ValueOracle, P: Iterable[Hashable], partition: PartitionMatroid
                   ) -> ResidualInstance:
    P = frozenset(P)
    if not partition.is_independent(P):
        raise ValueError("P must be independent")
    keep, parts, bounds = [], [], []
    for j, (part, bound, used) in enumerate(zip(partition.parts, partition.bounds,
                                                partition.counts(P))):
        if used < bound:
            keep.append(j)
            parts.append([e for e in part if e not in P])
            bounds.append(bound - used)
    ground = [e for part in parts for e in part]
    residual = PartitionMatroid(parts, bounds) if parts else None
    return ResidualInstance(P, ResidualOracle(f, P, ground), residual, keep)


def fill_to_base(S: Iterable[Hashable], partition: PartitionMatroid) -> frozenset:
    """Pad an independent set with the smallest unused elements of each part.

    Projecting a copy base can merge copies of one item; for monotone f the
    padding never lowers the value and costs no queries.
    """
    S = set(S)
    for part, bound, used in zip(partition.parts, partition.bounds, partition.counts(S)):
        S.update([e for e in part if e not in S][:bound - used])
    return frozenset(S)


def _prep_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 7])))


def solve_with_preprocessing(f: ValueOracle, partition: PartitionMatroid, epsilon: float,
                             oracle_kind: str, seed: int, *, c: float | None = None,
                             force: bool = False, batched: bool = True,
                             use_reduced: bool | None = None) -> RunReport:
    """Full pipeline: exact-extension swaps, or preprocessing plus bandit swaps.

    ``use_reduced`` selects the copy-instance swaps; by default they are used
    exactly when some part admits more than one element.
    """
    reduced_path = (not partition.is_simple) if use_reduced is None else use_reduced
    if oracle_kind not in ("F", "f"):
        raise ValueError("oracle_kind must be 'F' or 'f'")
    heuristic = False
    if oracle_kind == "f" and not 0.0 < epsilon < 0.25:
        if not force:
            raise ValueError("the value-oracle pipeline needs 0 < epsilon < 1/4 (use force)")
        heuristic = True
    f_before = f.queries
    started = time.perf_counter()

    if oracle_kind == "F":
        if not reduced_path:
            F = ExtensionOracle(f)
            report = run_gs_poisson(partition, f, PartitionSwapF(F, partition), epsilon, seed,
                                    extension=F)
        else:
            reduced = build_reduced_instance(f, partition)
            swap = GeneralizedSwapF(reduced, epsilon / 2)
            report = run_gs_poisson(reduced.matroid, reduced.g, swap, epsilon / 2, seed,
                                    extension=reduced.G)
            report.final_base = fill_to_base(project(report.final_base), partition)
            report.final_value = f.value(report.final_base)
        report.value_queries = f.queries - f_before
        return report

    delta1 = epsilon / 8
    prep = fast_preprocess(f, partition, delta1, _prep_rng(seed))
    c = derived_constant(delta1) if c is None else c
    residual = build_residual(f, prep.P, partition)
    events = 0
    if residual.empty:
        final = prep.P
    elif not reduced_path:
        delta2 = epsilon / (8 * c)
        swap = SimpleBanditSwap(residual.f_P, residual.partition, delta2, batched)
        rep = run_gs_poisson(residual.partition, residual.f_P, swap, delta2, seed)
        final, events = rep.final_base | prep.P, rep.swap_events
    else:
        delta2 = epsilon / (16 * c)
        reduced = build_reduced_instance(residual.f_P, residual.partition)
        swap = GeneralizedSwapf(reduced, delta2, batched)
        rep = run_gs_poisson(reduced.matroid, reduced.g, swap, delta2, seed)
        final = fill_to_base(project(rep.final_base) | prep.P, partition)
        events = rep.swap_events
    if not partition.is_base(final):
        raise AssertionError("pipeline output is not a base")
    return RunReport(final, f.value(final), events, f.queries - f_before, 0, int(seed),
                     time.perf_counter() - started, heuristic)

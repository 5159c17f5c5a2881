"""Swap procedures for partition and generalized partition matroids.

Two exact-gradient procedures (``PartitionSwapF``, ``GeneralizedSwapF``) and two
value-oracle procedures that replace the argmax with best-arm identification
(``SimpleBanditSwap``, ``GeneralizedSwapf``). The generalized ones act on a copy
instance in which every item has rank + 1 interchangeable copies.
"""

from __future__ import annotations

import math
from collections.abc import Hashable, Mapping, Sequence

import numpy as np

from .bandits import ArmSampler, best_arm_result
from .matroid import PartitionMatroid
from .poisson import Contract, SwapDecision
from .submodular import (DEFAULT_SUPPORT_CAP, ExtensionOracle, ScaledBasePoint, ValueOracle,
                         as_extension, exact_multilinear, gradient_at_scaled_base)

# Arms whose randomness ranges over at most 2**BATCH_LIMIT subsets draw batch
# means from the exact outcome distribution instead of one sample at a time.
BATCH_LIMIT = 16


def _argmax(candidates: Sequence, scores: Mapping) -> Hashable:
    best = None
    for c in candidates:  # candidates are sorted, so ties keep the smaller one
        if best is None or scores[c] > scores[best]:
            best = c
    return best


def _member_of_part(A: frozenset, part: Sequence) -> list:
    return sorted(a for a in part if a in A)


class MarginalArm(ArmSampler):
    """Reward (h(R + i) - h(R - i)) / scale with R drawn from t * 1_A.

    Each draw costs two queries of ``h``. With ``batched`` the mean of m draws is
    taken from a multinomial over the 2**|A| outcomes of R, which has the same
    law as m separate draws; the 2m queries are still charged to ``h``.
    """

    def __init__(self, h: ValueOracle, A: frozenset, t: float, i: Hashable, scale: float,
                 batched: bool = True):
        self.h = h
        self.members = sorted(A)
        self.t = t
        self.label = i
        self.scale = scale
        self.batched = batched and len(self.members) <= BATCH_LIMIT
        self._law: tuple[np.ndarray, np.ndarray] | None = None
        self.draws = 0

    def _reward(self, low: float, high: float) -> float:
        v = (high - low) / self.scale
        if not -1e-9 <= v <= 1.0 + 1e-9:
            raise AssertionError(f"arm reward {v} outside [0, 1]")
        return min(max(v, 0.0), 1.0)

    def sample(self, rng):
        keep = rng.random(len(self.members)) < self.t
        R = frozenset(a for a, k in zip(self.members, keep) if k)
        self.draws += 1
        return self._reward(self.h(R - {self.label}), self.h(R | {self.label}))

    def law(self) -> tuple[np.ndarray, np.ndarray]:
        """Outcome values and probabilities of one draw (uncounted evaluations)."""
        if self._law is None:
            values, probs = [], []
            size = len(self.members)
            for mask in range(1 << size):
                R = frozenset(self.members[b] for b in range(size) if mask >> b & 1)
                ones = mask.bit_count()
                probs.append(self.t ** ones * (1.0 - self.t) ** (size - ones))
                values.append(self._reward(self.h.value(R - {self.label}),
                                           self.h.value(R | {self.label})))
            self._law = (np.array(values), np.array(probs))
        return self._law

    def sample_mean(self, rng, m):
        if not self.batched:
            return super().sample_mean(rng, m)
        values, probs = self.law()
        counts = rng.multinomial(m, probs / probs.sum())
        self.h.charge(2 * m)
        self.draws += m
        return float(counts @ values) / m


class PartitionSwapF:
    """Uniform part, then the best element of that part by exact gradient."""

    def __init__(self, F: ExtensionOracle | ValueOracle, partition: PartitionMatroid):
        if not partition.is_simple:
            raise ValueError("PartitionSwapF needs a simple partition matroid")
        self.F = as_extension(F)
        self.partition = partition
        self.contract = Contract.above_average()

    def decision_for_part(self, t: float, A: frozenset, r: int) -> SwapDecision:
        part = self.partition.parts[r]
        (a_r,) = _member_of_part(A, part)
        p = ScaledBasePoint(t, A)
        grads = {i: gradient_at_scaled_base(self.F, p, i) for i in part}
        return SwapDecision(a_r, _argmax(part, grads))

    def outcomes(self, t: float, A: frozenset) -> list[tuple[float, SwapDecision]]:
        k = self.partition.k
        return [(1.0 / k, self.decision_for_part(t, A, r)) for r in range(k)]

    def __call__(self, t, A, rng):
        return self.decision_for_part(t, A, int(rng.integers(self.partition.k)))


class SimpleBanditSwap:
    """Uniform part, then best-arm identification over sampled marginals."""

    def __init__(self, f: ValueOracle, partition: PartitionMatroid, delta: float,
                 batched: bool = True):
        if not partition.is_simple:
            raise ValueError("SimpleBanditSwap needs a simple partition matroid")
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        self.f = f
        self.partition = partition
        self.delta = delta
        self.batched = batched
        self.contract = Contract("approx", 1.0, float("nan"))
        self.eta_per_marratio = delta
        self.bandit_samples = 0

    def decision_for_part(self, t, A, r, rng) -> SwapDecision:
        part = self.partition.parts[r]
        (a_r,) = _member_of_part(A, part)
        alpha = max(self.f.singleton_gain(i) for i in part)
        if alpha <= 0.0:
            return SwapDecision(a_r, a_r)
        arms = [MarginalArm(self.f, A, t, i, alpha, self.batched) for i in part]
        result = best_arm_result(arms, self.delta, rng)
        self.bandit_samples += result.samples
        return SwapDecision(a_r, part[result.index])

    def __call__(self, t, A, rng):
        return self.decision_for_part(t, A, int(rng.integers(self.partition.k)), rng)


class LiftedOracle(ValueOracle):
    """g(Q) = f(items that have at least one copy in Q); queries are also charged to f."""

    def __init__(self, f: ValueOracle, copies: Sequence[tuple]):
        super().__init__(copies)
        self.f = f

    def _evaluate(self, Q):
        return self.f.value(project(Q))

    def __call__(self, Q):
        self.f.charge(1)
        return super().__call__(Q)

    def charge(self, count):
        self.f.charge(count)
        super().charge(count)


def project(Q) -> frozenset:
    return frozenset(i for i, _ in Q)


def reduced_extension_value(f: ValueOracle, y: Mapping[tuple, float],
                            cap: int = DEFAULT_SUPPORT_CAP) -> float:
    """G(y) through F(x) with x_i = 1 - prod_s (1 - y_(i,s))."""
    miss: dict = {}
    for (i, _), p in y.items():
        miss[i] = miss.get(i, 1.0) * (1.0 - float(p))
    return exact_multilinear(f, {i: 1.0 - q for i, q in miss.items()}, cap)


class ReducedExtension(ExtensionOracle):
    """Counted G oracle on the copy instance; each call is one F evaluation."""

    def __init__(self, f: ValueOracle, cap: int = DEFAULT_SUPPORT_CAP):
        super().__init__(f, cap)

    def value(self, y):
        key = frozenset((e, p) for e, p in y.items() if p != 0.0)
        v = self._memo.get(key)
        if v is None:
            v = reduced_extension_value(self.f, y, self.cap)
            if len(self._memo) > 200_000:
                self._memo.clear()
            self._memo[key] = v
        return v


class ReducedInstance:
    """Copy instance: item i of part j becomes copies (i, 0..r) in copy part j."""

    def __init__(self, f: ValueOracle, partition: PartitionMatroid):
        self.f = f
        self.partition = partition
        self.r = partition.rank
        self.slots = self.r + 1
        self.copy_parts = [[(i, s) for i in part for s in range(self.slots)]
                           for part in partition.parts]
        self.matroid = PartitionMatroid(self.copy_parts, partition.bounds)
        self.g = LiftedOracle(f, [c for part in self.copy_parts for c in part])
        self.G = ReducedExtension(f)

    @property
    def size(self) -> int:
        return len(self.g.ground)

    def lift(self, S) -> frozenset:
        """Copy set using slot 0 for every item of S."""
        return frozenset((i, 0) for i in S)

    def candidates(self, A: frozenset) -> dict:
        """For every item, its smallest-slot copy outside A."""
        taken: dict = {}
        for i, s in A:
            taken.setdefault(i, set()).add(s)
        out = {}
        for i in self.partition.ground:
            used = taken.get(i, ())
            out[i] = (i, next(s for s in range(self.slots) if s not in used))
        return out


def build_reduced_instance(f: ValueOracle, partition: PartitionMatroid) -> ReducedInstance:
    return ReducedInstance(f, partition)


def sample_size(part_size: int, bound: int, delta: float) -> int:
    """ceil((|U_j| / l_j) ln(1/delta)) clamped to [1, |U_j|]."""
    raw = math.ceil(part_size / bound * math.log(1.0 / delta) - 1e-12)
    return min(max(raw, 1), part_size)


class _GeneralizedBase:
    def __init__(self, reduced: ReducedInstance, delta: float):
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        self.reduced = reduced
        self.delta = delta
        bounds = np.array(reduced.partition.bounds, dtype=float)
        self._part_probs = bounds / bounds.sum()

    def _setup(self, A, rng):
        part = self.reduced.partition
        j = int(rng.choice(part.k, p=self._part_probs))
        cand = self.reduced.candidates(A)
        pool = [cand[i] for i in part.parts[j]]
        size = sample_size(len(pool), part.bounds[j], self.delta)
        X = [pool[x] for x in sorted(rng.choice(len(pool), size=size, replace=False))]
        A_j = _member_of_part(A, self.reduced.copy_parts[j])
        out = A_j[int(rng.integers(len(A_j)))]
        return X, out


class GeneralizedSwapF(_GeneralizedBase):
    """Sampled candidate copies of one part, best by exact gradient of G."""

    def __init__(self, reduced: ReducedInstance, delta: float):
        super().__init__(reduced, delta)
        self.G = reduced.G
        self.contract = Contract.approx(1.0 - delta, 0.0)

    def __call__(self, t, A, rng):
        X, out = self._setup(A, rng)
        here = {a: t for a in A}
        base = self.G(here)
        w = {}
        for c in X:
            point = dict(here)
            point[c] = 1.0
            w[c] = self.G(point) - base
        return SwapDecision(out, _argmax(X, w))


class GeneralizedSwapf(_GeneralizedBase):
    """As GeneralizedSwapF, with best-arm identification on sampled g-marginals."""

    def __init__(self, reduced: ReducedInstance, delta: float, batched: bool = True):
        if not delta < 1.0 / math.e:
            raise ValueError("delta must be below 1/e")
        super().__init__(reduced, delta)
        self.inner_delta = delta / math.log(1.0 / delta)
        self.batched = batched
        self.contract = Contract("approx", 1.0 - delta, float("nan"))
        self.eta_per_marratio = delta
        self.bandit_samples = 0

    def __call__(self, t, A, rng):
        X, out = self._setup(A, rng)
        alpha = max(self.reduced.f.singleton_gain(i) for i, _ in X)
        if alpha <= 0.0:
            return SwapDecision(out, out)
        arms = [MarginalArm(self.reduced.g, A, t, c, alpha, self.batched) for c in X]
        result = best_arm_result(arms, self.inner_delta, rng)
        self.bandit_samples += result.samples
        return SwapDecision(out, X[result.index])


def partition_swap_F(t, A, f, partition, rng) -> SwapDecision:
    return PartitionSwapF(f, partition)(t, A, rng)


def simple_bandit_swap(t, A, f, partition, delta, rng) -> SwapDecision:
    return SimpleBanditSwap(f, partition, delta)(t, A, rng)


def generalized_swap_F(t, A, reduced, delta, rng) -> SwapDecision:
    return GeneralizedSwapF(reduced, delta)(t, A, rng)


def generalized_swap_f(t, A, reduced, delta, rng) -> SwapDecision:
    return GeneralizedSwapf(reduced, delta)(t, A, rng)

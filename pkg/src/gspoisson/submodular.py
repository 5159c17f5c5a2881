"""Value oracles, the multilinear extension and gradients at scaled bases."""

from __future__ import annotations

import math
import threading
from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .matroid import Matroid, greedy_max_weight_base

DEFAULT_SUPPORT_CAP = 25


class ValueOracle:
    """A set function with a query counter.

    ``f(S)`` counts one query; ``f.value(S)`` evaluates without counting and is
    meant for verification code that must not disturb the algorithm's tally.
    """

    def __init__(self, ground: Iterable[Hashable]):
        self.ground: tuple = tuple(sorted(ground))
        self.queries = 0
        self._lock = threading.Lock()
        self._empty: float | None = None
        self._singletons: dict = {}

    def _evaluate(self, S: frozenset) -> float:
        raise NotImplementedError

    def value(self, S: Iterable[Hashable]) -> float:
        return self._evaluate(S if isinstance(S, frozenset) else frozenset(S))

    def __call__(self, S: Iterable[Hashable]) -> float:
        with self._lock:
            self.queries += 1
        return self.value(S)

    def charge(self, count: int) -> None:
        """Add queries that were accounted for without an explicit call."""
        with self._lock:
            self.queries += int(count)

    def empty_value(self) -> float:
        """f(empty set), queried once and cached."""
        if self._empty is None:
            self._empty = self(frozenset())
        return self._empty

    def singleton_gain(self, i: Hashable) -> float:
        """f({i}) - f(empty set); each singleton is queried at most once."""
        if i not in self._singletons:
            self._singletons[i] = self(frozenset((i,))) - self.empty_value()
        return self._singletons[i]


class CoverageFunction(ValueOracle):
    """Weighted coverage: f(S) is the weight of the items covered by S."""

    def __init__(self, covers: Sequence[Iterable[int]], item_weights: Sequence[float]):
        super().__init__(range(len(covers)))
        self.covers = [tuple(sorted(set(c))) for c in covers]
        self.item_weights = [float(w) for w in item_weights]
        if any(w < 0 for w in self.item_weights):
            raise ValueError("item weights must be non-negative")
        for c in self.covers:
            for item in c:
                if not 0 <= item < len(self.item_weights):
                    raise ValueError(f"item {item} has no weight")
        self._masks = [sum(1 << item for item in c) for c in self.covers]
        self._memo: dict[frozenset, float] = {}

    def _evaluate(self, S):
        v = self._memo.get(S)
        if v is None:
            mask = 0
            for e in S:
                mask |= self._masks[e]
            v = 0.0
            item = 0
            while mask:
                if mask & 1:
                    v += self.item_weights[item]
                mask >>= 1
                item += 1
            self._memo[S] = v
        return v


class ModularFunction(ValueOracle):
    """f(S) = offset + sum of per-element weights."""

    def __init__(self, weights: Sequence[float] | Mapping, offset: float = 0.0):
        if not isinstance(weights, Mapping):
            weights = dict(enumerate(weights))
        super().__init__(weights)
        self.weights = {e: float(w) for e, w in weights.items()}
        self.offset = float(offset)

    def _evaluate(self, S):
        return self.offset + sum(self.weights[e] for e in S)


class FunctionOracle(ValueOracle):
    """Wraps a plain callable on frozensets."""

    def __init__(self, ground: Iterable[Hashable], fn: Callable[[frozenset], float]):
        super().__init__(ground)
        self._fn = fn

    def _evaluate(self, S):
        return float(self._fn(S))


@dataclass(frozen=True)
class ScaledBasePoint:
    """The point t * 1_A."""

    t: float
    A: frozenset

    def vector(self) -> dict:
        return {a: self.t for a in self.A}


def exact_multilinear(f: ValueOracle, x: Mapping[Hashable, float] | Sequence[float],
                      cap: int = DEFAULT_SUPPORT_CAP) -> float:
    """F(x) by enumerating subsets of the fractional coordinates only.

    ``x`` is sparse: a mapping element -> probability (missing means 0), or a
    dense sequence indexed by element. Underlying evaluations are not counted.
    """
    if not isinstance(x, Mapping):
        x = dict(enumerate(x))
    ones = []
    frac = []
    for e, p in x.items():
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"coordinate {e!r}={p} outside [0, 1]")
        if p == 1.0:
            ones.append(e)
        elif p > 0.0:
            frac.append((e, p))
    if len(frac) > cap:
        raise ValueError(f"fractional support {len(frac)} exceeds the enumeration cap {cap}")
    weights = [1.0]
    sets = [frozenset(ones)]
    for e, p in frac:
        q = 1.0 - p
        weights = [w * q for w in weights] + [w * p for w in weights]
        sets = sets + [s | {e} for s in sets]
    return math.fsum(w * f.value(s) for w, s in zip(weights, sets))


class ExtensionOracle:
    """Counted access to the exact multilinear extension of ``f``."""

    def __init__(self, f: ValueOracle, cap: int = DEFAULT_SUPPORT_CAP):
        self.f = f
        self.cap = cap
        self.queries = 0
        self._lock = threading.Lock()
        self._memo: dict[frozenset, float] = {}

    def __call__(self, x: Mapping[Hashable, float]) -> float:
        with self._lock:
            self.queries += 1
        return self.value(x)

    def value(self, x: Mapping[Hashable, float]) -> float:
        key = frozenset((e, p) for e, p in x.items() if p != 0.0)
        v = self._memo.get(key)
        if v is None:
            v = exact_multilinear(self.f, x, self.cap)
            if len(self._memo) > 200_000:
                self._memo.clear()
            self._memo[key] = v
        return v


def as_extension(oracle: ValueOracle | ExtensionOracle) -> ExtensionOracle:
    return oracle if isinstance(oracle, ExtensionOracle) else ExtensionOracle(oracle)


def gradient_at_scaled_base(F: ValueOracle | ExtensionOracle, p: ScaledBasePoint,
                            i: Hashable) -> float:
    """Partial derivative of F at t * 1_A in coordinate i (two F evaluations)."""
    F = as_extension(F)
    low = {a: p.t for a in p.A if a != i}
    high = dict(low)
    high[i] = 1.0
    return F(high) - F(low)


def sample_marginal(f: ValueOracle, p: ScaledBasePoint, i: Hashable,
                    rng: np.random.Generator) -> float:
    """One unbiased draw of the coordinate-i gradient at t * 1_A (two value queries)."""
    members = sorted(p.A)
    keep = rng.random(len(members)) < p.t
    R = frozenset(a for a, k in zip(members, keep) if k)
    return f(R | {i}) - f(R - {i})


def marginals_to_opt_ratio(f: ValueOracle, matroid: Matroid, opt_value: float) -> float:
    """Best independent sum of singleton marginals, divided by the optimum."""
    if opt_value <= 0:
        raise ValueError("opt_value must be positive")
    empty = f.value(frozenset())
    gains = {e: f.value(frozenset((e,))) - empty for e in matroid.ground}
    best = greedy_max_weight_base(matroid, gains)
    return sum(max(gains[e], 0.0) for e in best) / opt_value

"""The GS-Poisson engine: a Poisson clock with rate k/t driving base swaps."""

from __future__ import annotations

import math
import sys
import time
from collections.abc import Hashable, Iterable
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .matroid import Matroid, base_exchange_map, greedy_max_weight_base, uniform_random_base
from .submodular import (ExtensionOracle, ScaledBasePoint, ValueOracle, as_extension,
                         gradient_at_scaled_base, sample_marginal)

_TINY = sys.float_info.min


@dataclass(frozen=True)
class Contract:
    """Swap guarantee metadata: ``kind`` is ``above_average`` or ``approx``."""

    kind: str
    beta: float = 1.0
    eta: float = 0.0

    @classmethod
    def above_average(cls) -> "Contract":
        return cls("above_average")

    @classmethod
    def approx(cls, beta: float, eta: float) -> "Contract":
        return cls("approx", float(beta), float(eta))


@dataclass(frozen=True)
class SwapDecision:
    out: Hashable
    into: Hashable

    @property
    def is_noop(self) -> bool:
        return self.out == self.into


class SwapProcedure(Protocol):
    contract: Contract | None

    def __call__(self, t: float, A: frozenset, rng: np.random.Generator) -> SwapDecision: ...


@dataclass
class PoissonClock:
    """Current time of a process with rate k/t started at epsilon."""

    t: float
    k: int
    epsilon: float

    def rate(self) -> float:
        return self.k / self.t


def sample_next_event(clock: PoissonClock, rng: np.random.Generator | None = None,
                      u: float | None = None) -> float:
    """Time of the next event after ``clock.t`` by inverting 1 - (t/r)^k."""
    if u is None:
        u = float(rng.random())
    if u <= 0.0:
        u = _TINY
    return clock.t * u ** (-1.0 / clock.k)


@dataclass
class RunReport:
    final_base: frozenset
    final_value: float
    swap_events: int
    value_queries: int
    extension_queries: int
    seed: int
    wall_time: float = field(compare=False)
    heuristic: bool = False

    def row(self) -> dict:
        return {"seed": self.seed, "value": self.final_value, "swap_events": self.swap_events,
                "value_queries": self.value_queries,
                "extension_queries": self.extension_queries, "wall_time": self.wall_time}


def run_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent Philox streams for initialization, the clock and the swaps."""
    children = np.random.SeedSequence(int(seed)).spawn(3)
    return tuple(np.random.Generator(np.random.Philox(c)) for c in children)


def run_gs_poisson(matroid: Matroid, f: ValueOracle | None, swap: SwapProcedure, epsilon: float,
                   seed: int, *, extension: ExtensionOracle | None = None,
                   initial_base: Iterable[Hashable] | None = None,
                   check_feasibility: bool = True) -> RunReport:
    """Simulate the clock from epsilon to 1 and apply one swap per event."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    started = time.perf_counter()
    init_rng, clock_rng, swap_rng = run_streams(seed)
    A = frozenset(initial_base) if initial_base is not None else uniform_random_base(matroid, init_rng)
    k = matroid.rank
    value_before = f.queries if f is not None else 0
    ext_before = extension.queries if extension is not None else 0
    clock = PoissonClock(epsilon, k, epsilon)
    events = 0
    while k > 0:
        r = sample_next_event(clock, clock_rng)
        if r >= 1.0:
            break
        clock.t = r
        decision = swap(r, A, swap_rng)
        if decision.out not in A:
            raise AssertionError(f"swap removed {decision.out!r}, which is not in the base at t={r}")
        A = (A - {decision.out}) | {decision.into}
        if check_feasibility and not (len(A) == k and matroid.is_independent(A)):
            raise AssertionError(f"swap {decision} broke feasibility at t={r}; base={sorted(A)}")
        events += 1
    return RunReport(
        final_base=A,
        final_value=f.value(A) if f is not None else float("nan"),
        swap_events=events,
        value_queries=(f.queries - value_before) if f is not None else 0,
        extension_queries=(extension.queries - ext_before) if extension is not None else 0,
        seed=int(seed),
        wall_time=time.perf_counter() - started,
        heuristic=getattr(swap, "contract", None) is None,
    )


class FullBaseSwap:
    """Swap toward the gradient-maximizing base through a base exchange map.

    ``gradient_mode='exact'`` uses the multilinear extension and is above-average;
    ``'sampled'`` averages ``samples`` marginal draws per element and carries no
    contract.
    """

    def __init__(self, f: ValueOracle, matroid: Matroid, gradient_mode: str = "exact",
                 samples: int = 64, extension: ExtensionOracle | None = None):
        if gradient_mode not in ("exact", "sampled"):
            raise ValueError("gradient_mode must be 'exact' or 'sampled'")
        self.f = f
        self.matroid = matroid
        self.mode = gradient_mode
        self.samples = samples
        self.F = extension if extension is not None else as_extension(f)
        self.contract = Contract.above_average() if gradient_mode == "exact" else None

    def gradients(self, t: float, A: frozenset, rng: np.random.Generator) -> dict:
        p = ScaledBasePoint(t, A)
        if self.mode == "exact":
            return {e: gradient_at_scaled_base(self.F, p, e) for e in self.matroid.ground}
        return {e: float(np.mean([sample_marginal(self.f, p, e, rng) for _ in range(self.samples)]))
                for e in self.matroid.ground}

    def exchange(self, t: float, A: frozenset, rng: np.random.Generator) -> dict:
        Z = greedy_max_weight_base(self.matroid, self.gradients(t, A, rng))
        return base_exchange_map(self.matroid, A, Z)

    def outcomes(self, t: float, A: frozenset) -> list[tuple[float, SwapDecision]]:
        """The k equally likely decisions (exact mode only)."""
        h = self.exchange(t, A, None)
        return [(1.0 / len(A), SwapDecision(i, h[i])) for i in sorted(A)]

    def __call__(self, t, A, rng):
        h = self.exchange(t, A, rng)
        members = sorted(A)
        i = members[int(rng.integers(len(members)))]
        return SwapDecision(i, h[i])


def full_base_swap(t: float, A: frozenset, f: ValueOracle, matroid: Matroid,
                   gradient_mode: str = "exact", rng: np.random.Generator | None = None
                   ) -> SwapDecision:
    rng = rng if rng is not None else np.random.default_rng()
    return FullBaseSwap(f, matroid, gradient_mode)(t, A, rng)


def expected_events(k: int, epsilon: float) -> float:
    return k * math.log(1.0 / epsilon)

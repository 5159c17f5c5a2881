"""Separable assignment (SAP) and generalized assignment (GAP) via GS-Poisson.

The ground set consists of pairs ``(bin, frozenset_of_items)``; a base holds one
pair per bin. Gradients in pair directions have a closed form per item, so a swap
reduces to one weighted packing problem in a random bin.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from itertools import product

import numpy as np

from .matroid import Matroid
from .poisson import Contract, RunReport, SwapDecision, run_gs_poisson
from .submodular import ValueOracle

CAPACITY_SLACK = 1e-12
EXACT_PACK_LIMIT = 20


@dataclass
class GapInstance:
    values: np.ndarray  # shape (m, n)
    sizes: np.ndarray  # shape (m, n), capacity 1 per bin

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.sizes = np.asarray(self.sizes, dtype=float)
        if self.values.shape != self.sizes.shape or self.values.ndim != 2:
            raise ValueError("values and sizes must be matrices of equal shape")
        if (self.values < 0).any() or (self.sizes < 0).any():
            raise ValueError("values and sizes must be non-negative")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def feasible(self, i: int, S: Iterable[int]) -> bool:
        return float(sum(self.sizes[i, j] for j in S)) <= 1.0 + CAPACITY_SLACK

    def to_json(self) -> dict:
        return {"bins": self.m, "items": self.n, "values": self.values.tolist(),
                "sizes": self.sizes.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "GapInstance":
        inst = cls(data["values"], data["sizes"])
        if inst.m != data["bins"] or inst.n != data["items"]:
            raise ValueError("bins/items do not match the matrix shapes")
        return inst


@dataclass
class SapInstance:
    """Values plus a down-closed feasibility oracle and a packing routine per bin."""

    values: np.ndarray
    feasible: Callable[[int, frozenset], bool]
    pack: Callable[[int, np.ndarray], frozenset]
    ratio: float = 1.0

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


def gap_as_sap(gap: GapInstance, mode: str = "exact_small", epsilon: float = 0.1) -> SapInstance:
    def pack(i, weights):
        return approx_pack_knapsack(weights, gap.sizes[i], 1.0, mode, epsilon)

    ratio = 1.0 if mode == "exact_small" else 1.0 - epsilon
    return SapInstance(gap.values, gap.feasible, pack, ratio)


def sap_objective(values: np.ndarray, collection: Iterable[tuple[int, Iterable[int]]]) -> float:
    """Sum over items of the best value among the pairs whose set holds the item."""
    best: dict[int, float] = {}
    for i, S in collection:
        for j in S:
            v = float(values[i, j])
            if v > best.get(j, -1.0):
                best[j] = v
    return math.fsum(best.values())


class SapOracle(ValueOracle):
    """The SAP objective as a value oracle on (bin, set) pairs."""

    def __init__(self, values: np.ndarray):
        super().__init__(())
        self.values = np.asarray(values, dtype=float)

    def _evaluate(self, S):
        return sap_objective(self.values, S)


class AssignmentState:
    """Current set of each bin with item indicators and per-item bin orders."""

    def __init__(self, values: np.ndarray, sets: Sequence[Iterable[int]] | None = None,
                 value_classes: bool = False):
        self.values = np.asarray(values, dtype=float)
        m, n = self.values.shape
        # sigma[pos, j]: bin at position pos for item j (value desc, bin asc)
        self.sigma = np.array([sorted(range(m), key=lambda k: (-self.values[k, j], k))
                               for j in range(n)], dtype=int).T.reshape(m, n)
        self.rank = np.empty((m, n), dtype=int)
        for j in range(n):
            self.rank[self.sigma[:, j], j] = np.arange(m)
        self.sorted_values = np.take_along_axis(self.values, self.sigma, axis=0)
        self.indicator = np.zeros((m, n), dtype=bool)
        self.sets = [frozenset()] * m
        self.touches = 0
        self.value_classes = value_classes
        if value_classes:
            self._build_classes()
        for i, S in enumerate(sets or ()):
            self.set_bin(i, frozenset(S))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def _build_classes(self):
        self.classes = []  # per item: distinct positive values, descending
        self.class_of = np.full((self.m, self.n), -1, dtype=int)
        self.class_counts = []
        for j in range(self.n):
            distinct = sorted({float(v) for v in self.values[:, j] if v > 0}, reverse=True)
            self.classes.append(distinct)
            index = {v: c for c, v in enumerate(distinct)}
            for i in range(self.m):
                if self.values[i, j] > 0:
                    self.class_of[i, j] = index[float(self.values[i, j])]
            self.class_counts.append([0] * len(distinct))

    def set_bin(self, i: int, S: frozenset) -> None:
        """Replace bin i's set, updating indicators in O(|old| + |new|)."""
        old = self.sets[i]
        if old is S or old == S:
            return
        for j in old - S:
            self.indicator[i, j] = False
            if self.value_classes and self.class_of[i, j] >= 0:
                self.class_counts[j][self.class_of[i, j]] -= 1
        for j in S - old:
            self.indicator[i, j] = True
            if self.value_classes and self.class_of[i, j] >= 0:
                self.class_counts[j][self.class_of[i, j]] += 1
        self.sets[i] = S

    def base(self) -> frozenset:
        return frozenset(enumerate(self.sets))


def compute_swap_weights(state: AssignmentState, i: int, t: float) -> np.ndarray:
    """Per-item weights w with grad . 1_(i,T) = sum_{j in T} w_j for T != S_i."""
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0, 1)")
    if state.value_classes:
        return _class_weights(state, i, t)
    present = np.take_along_axis(state.indicator, state.sigma, axis=0)
    before = np.cumsum(present, axis=0) - present
    survive = (1.0 - t) ** before
    contrib = state.sorted_values * t * present * survive
    suffix = np.cumsum(contrib[::-1], axis=0)[::-1]
    cols = np.arange(state.n)
    pos = state.rank[i]
    state.touches += state.m * state.n
    return state.values[i] * survive[pos, cols] - suffix[pos, cols]


def _class_weights(state: AssignmentState, i: int, t: float) -> np.ndarray:
    q = 1.0 - t
    w = np.zeros(state.n)
    for j in range(state.n):
        own = state.class_of[i, j]
        if own < 0:
            continue
        above = 0
        loss = 0.0
        for c, value in enumerate(state.classes[j]):
            state.touches += 1
            count = state.class_counts[j][c]
            if c == own:
                gain = value * q ** above
            if c >= own and count:
                loss += value * q ** above * (1.0 - q ** count)
            above += count
        w[j] = gain - loss
    return w


def keep_gradient(state: AssignmentState, i: int, t: float) -> float:
    """Gradient in the direction of bin i's current pair, by direct difference."""
    y = np.full(state.m, t)
    y[i] = 1.0
    high = _expected_value(state, y)
    y[i] = 0.0
    return high - _expected_value(state, y)


def _expected_value(state: AssignmentState, y: np.ndarray) -> float:
    """F at the point giving pair (k, S_k) probability y_k."""
    present = np.take_along_axis(state.indicator, state.sigma, axis=0) * y[state.sigma]
    survive = np.vstack([np.ones((1, state.n)), np.cumprod(1.0 - present, axis=0)[:-1]])
    return float((state.sorted_values * present * survive).sum())


def approx_pack_knapsack(weights: Sequence[float], sizes: Sequence[float], capacity: float = 1.0,
                         mode: str = "exact_small", epsilon: float = 0.1) -> frozenset:
    """Max-weight subset within capacity: exhaustive, or the value-scaling FPTAS."""
    w = np.asarray(weights, dtype=float)
    s = np.asarray(sizes, dtype=float)
    if (w < 0).any():
        raise ValueError("packing weights must be non-negative")
    if mode == "exact_small":
        return _pack_exact(w, s, capacity)
    if mode == "fptas":
        return _pack_fptas(w, s, capacity, epsilon)
    raise ValueError(f"unknown packing mode {mode!r}")


def _pack_exact(w, s, capacity):
    n = len(w)
    if n > EXACT_PACK_LIMIT:
        raise ValueError(f"exact packing enumerates at most {EXACT_PACK_LIMIT} items, got {n}")
    best_mask, best_weight = 0, 0.0
    chunk = 1 << min(n, 16)
    shifts = np.arange(n)
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n))
        bits = (masks[:, None] >> shifts) & 1
        total = bits @ w
        fits = bits @ s <= capacity + CAPACITY_SLACK
        total = np.where(fits, total, -1.0)
        k = int(np.argmax(total))
        if total[k] > best_weight:
            best_mask, best_weight = int(masks[k]), float(total[k])
    return frozenset(j for j in range(n) if best_mask >> j & 1)


def _pack_fptas(w, s, capacity, epsilon):
    usable = [j for j in range(len(w)) if w[j] > 0 and s[j] <= capacity + CAPACITY_SLACK]
    if not usable:
        return frozenset()
    scale = epsilon * max(w[j] for j in usable) / len(usable)
    profit = [int(w[j] // scale) for j in usable]
    top = sum(profit)
    size = np.full(top + 1, np.inf)
    size[0] = 0.0
    took = np.zeros((len(usable), top + 1), dtype=bool)
    for row, (j, p) in enumerate(zip(usable, profit)):
        if p == 0:
            continue
        shifted = np.full(top + 1, np.inf)
        shifted[p:] = size[:-p] + s[j]
        better = shifted < size
        took[row] = better
        size = np.where(better, shifted, size)
    best = int(np.max(np.nonzero(size <= capacity + CAPACITY_SLACK)[0]))
    chosen = []
    for row in range(len(usable) - 1, -1, -1):
        if took[row, best]:
            chosen.append(usable[row])
            best -= profit[row]
    return frozenset(chosen)


class SapSwap:
    """Uniform bin, then the best packing under the current swap weights."""

    def __init__(self, instance: SapInstance, value_classes: bool = False):
        self.instance = instance
        self.state = AssignmentState(instance.values, value_classes=value_classes)
        self.contract = Contract.approx(instance.ratio, 0.0)

    def _sync(self, A: frozenset) -> None:
        for i, S in A:
            self.state.set_bin(i, S)

    def choose(self, t: float, i: int) -> frozenset:
        state = self.state
        w = compute_swap_weights(state, i, t)
        T = self.instance.pack(i, np.maximum(w, 0.0))
        T = frozenset(j for j in T if w[j] > 0)
        current = state.sets[i]
        if T == current:
            return current
        keep = (w[list(current)].sum() / (1.0 - t) if 1.0 - t > 1e-12
                else keep_gradient(state, i, t))
        return T if float(w[list(T)].sum()) > keep else current

    def __call__(self, t, A, rng):
        self._sync(A)
        i = int(rng.integers(self.state.m))
        T = self.choose(t, i)
        return SwapDecision((i, self.state.sets[i]), (i, T))


def sap_swap(t: float, state: AssignmentState, instance: SapInstance,
             rng: np.random.Generator) -> tuple[int, frozenset]:
    swap = SapSwap(instance)
    swap.state = state
    i = int(rng.integers(state.m))
    return i, swap.choose(t, i)


def round_values(gap: GapInstance, epsilon: float) -> GapInstance:
    """Snap values to the nearest power of 1 + epsilon (in log scale); drop tiny ones."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    v = gap.values
    floor = epsilon / (gap.n * gap.m) * v.max() if v.size else 0.0
    out = np.zeros_like(v)
    keep = (v >= floor) & (v > 0)
    exponents = np.floor(np.log(v[keep]) / math.log1p(epsilon) + 0.5)
    out[keep] = (1.0 + epsilon) ** exponents
    return GapInstance(out, gap.sizes.copy())


class BinMatroid(Matroid):
    """At most one (bin, set) pair per bin, each set feasible for its bin."""

    def __init__(self, m: int, feasible: Callable[[int, frozenset], bool]):
        super().__init__((), m)
        self.m = m
        self.feasible = feasible

    def is_independent(self, S):
        bins = set()
        for i, T in S:
            if i in bins or not 0 <= i < self.m or not self.feasible(i, T):
                return False
            bins.add(i)
        return True


@dataclass
class SapResult:
    assignment: list[frozenset]
    value: float
    report: RunReport


def extract_assignment(values: np.ndarray, base: Iterable[tuple[int, frozenset]]) -> list[frozenset]:
    """Give each covered item to its highest-value owning bin (smaller bin on ties)."""
    m, n = values.shape
    owner: dict[int, int] = {}
    for i, S in sorted(base, key=lambda p: p[0]):
        for j in S:
            if j not in owner or values[i, j] > values[owner[j], j]:
                owner[j] = i
    out = [set() for _ in range(m)]
    for j, i in owner.items():
        out[i].add(j)
    return [frozenset(S) for S in out]


def solve_sap(instance: SapInstance, epsilon: float, seed: int,
              value_classes: bool = False) -> SapResult:
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    matroid = BinMatroid(instance.m, instance.feasible)
    f = SapOracle(instance.values)
    swap = SapSwap(instance, value_classes)
    initial = frozenset((i, frozenset()) for i in range(instance.m))
    report = run_gs_poisson(matroid, f, swap, epsilon, seed, initial_base=initial)
    assignment = extract_assignment(instance.values, report.final_base)
    for i, S in enumerate(assignment):
        if not instance.feasible(i, S):
            raise AssertionError(f"extracted set for bin {i} is infeasible")
    value = sap_objective(instance.values, enumerate(assignment))
    if abs(value - report.final_value) > 1e-9 * max(1.0, value):
        raise AssertionError("extracted value differs from the final base value")
    return SapResult(assignment, value, report)


def solve_gap(gap: GapInstance, epsilon: float, seed: int, mode: str = "exact_small",
              pack_epsilon: float = 0.1) -> SapResult:
    return solve_sap(gap_as_sap(gap, mode, pack_epsilon), epsilon, seed)


def brute_force_gap(gap: GapInstance) -> tuple[float, list[frozenset]]:
    """Optimal assignment by trying every bin (or none) for every item."""
    best, best_sets = -1.0, None
    for choice in product(range(gap.m + 1), repeat=gap.n):
        sets = [frozenset(j for j in range(gap.n) if choice[j] == i) for i in range(gap.m)]
        if all(gap.feasible(i, S) for i, S in enumerate(sets)):
            value = sap_objective(gap.values, enumerate(sets))
            if value > best:
                best, best_sets = value, sets
    return best, best_sets

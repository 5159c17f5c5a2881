"""Matroid oracles, greedy base selection and base exchange maps.

Elements are hashable and totally ordered (plain ints for ordinary instances,
``(item, slot)`` tuples for copy instances). Ties are always broken toward the
smallest element so that every selection is deterministic.
"""

from __future__ import annotations

from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from itertools import combinations

import numpy as np

Element = Hashable


class StructureError(ValueError):
    """Raised when a matroid or partition description is malformed."""


class Matroid:
    """Independence oracle over a finite ground set."""

    def __init__(self, ground: Iterable[Element], rank_hint: int | None = None):
        self.ground: tuple = tuple(sorted(ground))
        self._rank = rank_hint

    def is_independent(self, S: Iterable[Element]) -> bool:
        raise NotImplementedError

    @property
    def rank(self) -> int:
        if self._rank is None:
            self._rank = len(_greedy(self, self.ground))
        return self._rank

    def is_base(self, S: Iterable[Element]) -> bool:
        S = frozenset(S)
        return len(S) == self.rank and self.is_independent(S)


class OracleMatroid(Matroid):
    """Matroid given by an arbitrary independence predicate."""

    def __init__(self, ground: Iterable[Element], predicate: Callable[[frozenset], bool],
                 rank_hint: int | None = None):
        super().__init__(ground, rank_hint)
        self._predicate = predicate

    def is_independent(self, S):
        return bool(self._predicate(frozenset(S)))


class UniformMatroid(Matroid):
    def __init__(self, n: int, k: int):
        if not 0 <= k <= n:
            raise StructureError(f"uniform matroid needs 0 <= k <= n, got k={k}, n={n}")
        super().__init__(range(n), k)
        self.k = k

    def is_independent(self, S):
        S = frozenset(S)
        return len(S) <= self.k and S <= set(self.ground)


class GraphicMatroid(Matroid):
    """Edge sets that contain no cycle. Element ``e`` is ``edges[e]``."""

    def __init__(self, edges: Sequence[tuple[int, int]]):
        self.edges = [tuple(e) for e in edges]
        super().__init__(range(len(self.edges)))

    def is_independent(self, S):
        parent: dict[int, int] = {}

        def find(x):
            while parent.get(x, x) != x:
                x = parent[x]
            return x

        for e in S:
            u, v = self.edges[e]
            ru, rv = find(u), find(v)
            if ru == rv:
                return False
            parent[ru] = rv
        return True


class PartitionMatroid(Matroid):
    """At most ``bounds[j]`` elements from each part ``parts[j]``.

    All bounds equal to one gives the simple partition matroid.
    """

    def __init__(self, parts: Sequence[Iterable[Element]], bounds: Sequence[int] | None = None):
        parts = [tuple(sorted(p)) for p in parts]
        if bounds is None:
            bounds = [1] * len(parts)
        bounds = [int(b) for b in bounds]
        if len(bounds) != len(parts):
            raise StructureError("parts and bounds differ in length")
        part_of: dict = {}
        for j, (part, bound) in enumerate(zip(parts, bounds)):
            if not 1 <= bound <= len(part):
                raise StructureError(f"part {j}: bound {bound} outside [1, {len(part)}]")
            for e in part:
                if e in part_of:
                    raise StructureError(f"element {e!r} appears in two parts")
                part_of[e] = j
        super().__init__(part_of, sum(bounds))
        self.parts: list[tuple] = parts
        self.bounds: list[int] = bounds
        self.part_of: dict = part_of

    @property
    def k(self) -> int:
        return len(self.parts)

    @property
    def is_simple(self) -> bool:
        return all(b == 1 for b in self.bounds)

    def counts(self, S: Iterable[Element]) -> list[int]:
        c = [0] * len(self.parts)
        for e in S:
            c[self.part_of[e]] += 1
        return c

    def is_independent(self, S):
        c = [0] * len(self.parts)
        for e in S:
            j = self.part_of.get(e)
            if j is None:
                return False
            c[j] += 1
            if c[j] > self.bounds[j]:
                return False
        return True

    def as_oracle(self) -> OracleMatroid:
        """The same matroid behind a generic predicate (no fast paths)."""
        return OracleMatroid(self.ground, self.is_independent)


def _greedy(matroid: Matroid, order: Iterable[Element]) -> list:
    chosen: list = []
    for e in order:
        if matroid.is_independent(chosen + [e]):
            chosen.append(e)
    return chosen


def greedy_max_weight_base(matroid: Matroid, weights: Mapping[Element, float] | Sequence[float]
                           ) -> frozenset:
    """Maximum-weight base; equal weights fall back to the smaller element."""
    w = _as_mapping(weights, matroid.ground)
    if isinstance(matroid, PartitionMatroid):
        chosen = []
        for part, bound in zip(matroid.parts, matroid.bounds):
            chosen.extend(sorted(part, key=lambda e: (-w[e], e))[:bound])
        return frozenset(chosen)
    chosen = _greedy(matroid, sorted(matroid.ground, key=lambda e: (-w[e], e)))
    if matroid._rank is not None and len(chosen) != matroid._rank:
        raise StructureError(f"greedy found {len(chosen)} elements, declared rank {matroid._rank}")
    return frozenset(chosen)


def base_exchange_map(matroid: Matroid, B1: Iterable[Element], B2: Iterable[Element]) -> dict:
    """Bijection h: B1 -> B2 with h fixed on B1 & B2 and B1 - i + h(i) a base."""
    B1, B2 = frozenset(B1), frozenset(B2)
    for B in (B1, B2):
        if not matroid.is_base(B):
            raise ValueError(f"not a base: {sorted(B)}")
    h = {i: i for i in B1 & B2}
    out, into = sorted(B1 - B2), sorted(B2 - B1)
    if isinstance(matroid, PartitionMatroid):
        by_part: dict[int, list] = {}
        for j in into:
            by_part.setdefault(matroid.part_of[j], []).append(j)
        for i in out:
            h[i] = by_part[matroid.part_of[i]].pop(0)
        return h
    adj = {i: [j for j in into if matroid.is_independent((B1 - {i}) | {j})] for i in out}
    match = _bipartite_matching(out, adj)
    if len(match) != len(out):
        raise AssertionError("exchange graph has no perfect matching; the oracle is not a matroid")
    h.update(match)
    return h


def _bipartite_matching(left: Sequence, adj: Mapping) -> dict:
    """Maximum matching by augmenting paths (Kuhn); returns left -> right."""
    owner: dict = {}

    def augment(u, seen):
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in owner or augment(owner[v], seen):
                owner[v] = u
                return True
        return False

    for u in left:
        augment(u, set())
    return {u: v for v, u in owner.items()}


def uniform_random_base(matroid: Matroid, rng: np.random.Generator) -> frozenset:
    """Random base: uniform per part for partition matroids, random-order greedy otherwise."""
    if isinstance(matroid, PartitionMatroid):
        chosen = []
        for part, bound in zip(matroid.parts, matroid.bounds):
            idx = rng.choice(len(part), size=bound, replace=False)
            chosen.extend(part[i] for i in idx)
        return frozenset(chosen)
    order = [matroid.ground[i] for i in rng.permutation(len(matroid.ground))]
    base = frozenset(_greedy(matroid, order))
    if len(base) != matroid.rank:
        raise StructureError("random-order greedy did not reach the rank")
    return base


def enumerate_bases(matroid: Matroid) -> list[frozenset]:
    """All bases in lexicographic order (product of per-part combinations for partitions)."""
    if isinstance(matroid, PartitionMatroid):
        bases = [frozenset()]
        for part, bound in zip(matroid.parts, matroid.bounds):
            bases = [b | frozenset(c) for b in bases for c in combinations(part, bound)]
        return bases
    return [frozenset(c) for c in combinations(matroid.ground, matroid.rank)
            if matroid.is_independent(c)]


def count_bases_upper(matroid: Matroid) -> int:
    from math import comb
    if isinstance(matroid, PartitionMatroid):
        total = 1
        for part, bound in zip(matroid.parts, matroid.bounds):
            total *= comb(len(part), bound)
        return total
    return comb(len(matroid.ground), matroid.rank)


@dataclass
class AxiomReport:
    passed: bool
    violation: str | None = None
    witness: tuple | None = None


MAX_AXIOM_GROUND = 12


def verify_matroid_axioms(matroid: Matroid, max_ground: int = MAX_AXIOM_GROUND) -> AxiomReport:
    """Exhaustive check of the three independence axioms."""
    ground = matroid.ground
    n = len(ground)
    if n > max_ground:
        raise ValueError(f"ground set of size {n} exceeds the enumeration limit {max_ground}")
    independent = [matroid.is_independent(_unmask(mask, ground)) for mask in range(1 << n)]
    if not independent[0]:
        return AxiomReport(False, "empty set is dependent", ())
    for mask in range(1 << n):
        if not independent[mask]:
            continue
        for b in range(n):
            if mask >> b & 1 and not independent[mask & ~(1 << b)]:
                return AxiomReport(False, "not closed under subsets",
                                   (tuple(_unmask(mask, ground)), ground[b]))
    by_size: dict[int, list[int]] = {}
    for mask in range(1 << n):
        if independent[mask]:
            by_size.setdefault(mask.bit_count(), []).append(mask)
    # Augmentation with |S| = |T| + 1 is equivalent to the general exchange axiom.
    for size, Ts in by_size.items():
        Ss = by_size.get(size + 1, [])
        for T in Ts:
            ext = 0
            for b in range(n):
                if not T >> b & 1 and independent[T | 1 << b]:
                    ext |= 1 << b
            for S in Ss:
                if S & ext == 0:
                    return AxiomReport(False, "exchange axiom fails",
                                       (tuple(_unmask(S, ground)), tuple(_unmask(T, ground))))
    return AxiomReport(True)


def _unmask(mask: int, ground: Sequence) -> list:
    return [ground[b] for b in range(len(ground)) if mask >> b & 1]


def _as_mapping(weights, ground) -> Mapping:
    if isinstance(weights, Mapping):
        return weights
    return {e: float(weights[e]) for e in ground}

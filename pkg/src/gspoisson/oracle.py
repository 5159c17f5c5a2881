"""Brute-force ground truth and checkers for swap contracts and invariants."""

from __future__ import annotations

import math
from collections.abc import Callable, Hashable, Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .assignment import brute_force_gap

__all__ = ["MAX_BASES", "MAX_BRUTE_GROUND", "CheckpointReport", "InvariantReport",
           "OptCertificate", "SwapCheck", "SwapReport", "brute_force_gap", "brute_force_optimum",
           "verify_checkpoint_properties", "verify_reduced_swap", "verify_sampling_bound",
           "verify_submodular_standard", "verify_swap_condition"]
from .matroid import Matroid, count_bases_upper, enumerate_bases
from .poisson import Contract
from .preprocess import checkpoint_set, exact_fraction
from .submodular import ExtensionOracle, ScaledBasePoint, ValueOracle, gradient_at_scaled_base

MAX_BASES = 10**6
MAX_BRUTE_GROUND = 16


@dataclass(frozen=True)
class OptCertificate:
    opt_set: frozenset
    opt_value: float
    bases_enumerated: int


def brute_force_optimum(f: ValueOracle, matroid: Matroid) -> OptCertificate:
    """Best base by enumeration; the first maximizer in lexicographic order wins ties."""
    if len(matroid.ground) > MAX_BRUTE_GROUND and not hasattr(matroid, "parts"):
        raise ValueError(f"ground set of {len(matroid.ground)} elements is too large")
    estimate = count_bases_upper(matroid)
    if estimate > MAX_BASES:
        raise ValueError(f"about {estimate} bases to enumerate; the limit is {MAX_BASES}")
    bases = enumerate_bases(matroid)
    best, best_value = None, -math.inf
    for B in bases:
        v = f.value(B)
        if v > best_value:
            best, best_value = B, v
    return OptCertificate(best, best_value, len(bases))


@dataclass
class SwapCheck:
    t: float
    base: frozenset
    lhs: float
    rhs: float
    slack: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


@dataclass
class SwapReport:
    passed: bool
    worst: SwapCheck | None
    checks: int
    estimate: str
    failures: list[SwapCheck] = field(default_factory=list)

    @property
    def worst_margin(self) -> float:
        return self.worst.margin if self.worst else math.inf

    def to_json(self) -> dict:
        w = self.worst
        return {"passed": self.passed, "checks": self.checks, "estimate": self.estimate,
                "worst_margin": self.worst_margin,
                "worst_t": w.t if w else None,
                "worst_base": sorted(map(repr, w.base)) if w else None,
                "failures": len(self.failures)}


def verify_swap_condition(swap, f: ValueOracle, matroid: Matroid, contract: Contract | None = None,
                          t_grid: Sequence[float] = tuple(i / 10 for i in range(1, 10)),
                          trials: int = 500, *, estimate: str = "exact",
                          bases: Iterable[frozenset] | None = None,
                          opt: OptCertificate | None = None,
                          opt_set_for: Callable[[frozenset], Iterable] | None = None,
                          gradient: Callable[[float, frozenset, Hashable], float] | None = None,
                          eta: float | None = None,
                          rng: np.random.Generator | None = None) -> SwapReport:
    """Check E[grad_in - grad_out] >= beta/k sum_O grad - 1/k sum_A grad - eta/k f(O).

    ``estimate='exact'`` needs ``swap.outcomes(t, A)``; ``'monte_carlo'`` calls the
    swap ``trials`` times and allows three standard errors of slack.
    """
    contract = contract or swap.contract
    beta = contract.beta if contract.kind == "approx" else 1.0
    eta = eta if eta is not None else (contract.eta if contract.kind == "approx" else 0.0)
    if math.isnan(eta):
        raise ValueError("this contract's eta depends on the instance; pass eta explicitly")
    opt = opt or brute_force_optimum(f, matroid)
    bases = list(bases) if bases is not None else enumerate_bases(matroid)
    if gradient is None:
        F = ExtensionOracle(f)

        def gradient(t, A, e):
            return gradient_at_scaled_base(F, ScaledBasePoint(t, A), e)

    rng = rng if rng is not None else np.random.default_rng(0)
    k = matroid.rank
    worst, failures, checks = None, [], 0
    for t in t_grid:
        for A in bases:
            cache: dict = {}

            def g(e):
                if e not in cache:
                    cache[e] = gradient(t, A, e)
                return cache[e]

            O = frozenset(opt_set_for(A)) if opt_set_for else opt.opt_set
            rhs = (beta * math.fsum(g(o) for o in O) - math.fsum(g(a) for a in A)
                   - eta * opt.opt_value) / k
            if estimate == "exact":
                lhs = math.fsum(p * (g(d.into) - g(d.out)) for p, d in swap.outcomes(t, A))
                slack = 1e-9
            elif estimate == "monte_carlo":
                gains = np.empty(trials)
                for s in range(trials):
                    d = swap(t, A, rng)
                    gains[s] = g(d.into) - g(d.out)
                lhs = float(gains.mean())
                slack = 3.0 * float(gains.std(ddof=1)) / math.sqrt(trials) + 1e-9
            else:
                raise ValueError(f"unknown estimate mode {estimate!r}")
            check = SwapCheck(t, A, lhs, rhs, slack)
            checks += 1
            if worst is None or check.margin < worst.margin:
                worst = check
            if check.margin < -slack:
                failures.append(check)
    return SwapReport(not failures, worst, checks, estimate, failures)


@dataclass
class InvariantReport:
    passed: bool
    checks: int
    worst_margin: float
    witness: tuple | None = None


def verify_submodular_standard(f: ValueOracle, trials: int, rng: np.random.Generator,
                               t_values: Sequence[float] = (0.1, 0.5, 0.9)) -> InvariantReport:
    """sum_{i in T} grad_i F(t 1_S) >= f(T) - F(t 1_S) on random (S, T, t)."""
    F = ExtensionOracle(f)
    ground = list(f.ground)
    worst, witness = math.inf, None
    for _ in range(trials):
        S = frozenset(e for e in ground if rng.random() < 0.5)
        T = frozenset(e for e in ground if rng.random() < 0.5)
        t = float(t_values[int(rng.integers(len(t_values)))])
        p = ScaledBasePoint(t, S)
        lhs = math.fsum(gradient_at_scaled_base(F, p, i) for i in T)
        rhs = f.value(T) - F.value(p.vector())
        if lhs - rhs < worst:
            worst, witness = lhs - rhs, (S, T, t)
    return InvariantReport(worst >= -1e-9, trials, worst, witness)


def verify_sampling_bound(weights: Sequence[float], M: Sequence[int], delta: float, draws: int,
                          rng: np.random.Generator) -> InvariantReport:
    """E[max_{e in X} w_e] >= (1 - delta) sum_M w / |M| for uniform X of size
    min(ceil(n/|M| ln(1/delta)), n)."""
    n, m = len(weights), len(M)
    w = np.asarray(weights, dtype=float)
    size = min(math.ceil(n / m * math.log(1.0 / delta)), n)
    # a uniform size-subset per draw: the indices of the smallest random keys
    keys = rng.random((draws, n))
    picked = np.argpartition(keys, size - 1, axis=1)[:, :size]
    best = w[picked].max(axis=1)
    target = (1.0 - delta) * w[list(M)].sum() / m
    se = best.std(ddof=1) / math.sqrt(draws) if draws > 1 else 0.0
    margin = float(best.mean() - target)
    return InvariantReport(margin >= -3.0 * se - 1e-12, draws, margin)


@dataclass
class CheckpointReport:
    k: int
    epsilon: Fraction
    sum_gap_ok: bool
    harmonic_ok: bool

    @property
    def passed(self) -> bool:
        return self.sum_gap_ok and self.harmonic_ok


def verify_checkpoint_properties(k: int, epsilon, d: int = 4) -> CheckpointReport:
    """Both checkpoint properties, decided in exact rational arithmetic.

    Property 2 is checked at the first index after each checkpoint; every later
    index in the same gap sums a subset of the same positive terms.
    """
    eps = exact_fraction(epsilon)
    cp = checkpoint_set(k, eps)
    sum_gap_ok = sum(k - i for i in cp.indices) * eps <= d * k
    harmonic_ok = True
    for prev, nxt in zip(cp.indices, cp.indices[1:]):
        i = prev + 1
        if i >= nxt:
            continue
        # sum_{i'=i+1}^{nxt} 1/(k - i' + 1)
        terms = range(k - nxt + 1, k - i + 1)
        approx = math.fsum(1.0 / x for x in terms)
        if approx < float(eps) - 1e-9:
            continue
        if sum(Fraction(1, x) for x in terms) > eps:
            harmonic_ok = False
            break
    return CheckpointReport(k, eps, sum_gap_ok, harmonic_ok)


def verify_reduced_swap(swap, reduced, t_grid: Sequence[float], trials: int,
                        rng: np.random.Generator, eta: float = 0.0, extra_bases: int = 10
                        ) -> SwapReport:
    """Monte Carlo contract check for a swap on the copy instance.

    Bases are the slot-0 lifts of every original base plus ``extra_bases`` random
    copy bases. The comparison solution for base A is an optimal original base
    mapped onto copies outside A.
    """
    from .matroid import uniform_random_base

    opt = brute_force_optimum(reduced.f, reduced.partition)
    bases = [reduced.lift(B) for B in enumerate_bases(reduced.partition)]
    bases += [uniform_random_base(reduced.matroid, rng) for _ in range(extra_bases)]
    cert = OptCertificate(reduced.lift(opt.opt_set), opt.opt_value, opt.bases_enumerated)

    def opt_for(A):
        cand = reduced.candidates(A)
        return [cand[i] for i in opt.opt_set]

    def gradient(t, A, e):
        low = {a: t for a in A if a != e}
        high = dict(low)
        high[e] = 1.0
        return reduced.G.value(high) - reduced.G.value(low)

    return verify_swap_condition(swap, reduced.g, reduced.matroid, t_grid=t_grid, trials=trials,
                                 estimate="monte_carlo", bases=bases, opt=cert,
                                 opt_set_for=opt_for, gradient=gradient, eta=eta, rng=rng)

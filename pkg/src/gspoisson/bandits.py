"""PAC best-arm identification by median elimination."""

from __future__ import annotations

import math
from collections.abc import Hashable, Sequence
from dataclasses import dataclass

import numpy as np

# Sample-complexity constant: best_arm never draws more than
# SAMPLE_CONSTANT * n * ln(1/delta) / delta**2 samples for delta <= 0.3.
# Derivation (geometric sums over the elimination rounds) is in the README.
SAMPLE_CONSTANT = 20_000


class ArmSampler:
    """A reward distribution supported on [0, 1]."""

    label: Hashable = None

    def sample(self, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def sample_mean(self, rng: np.random.Generator, m: int) -> float:
        """Mean of ``m`` independent draws; subclasses may draw it in one shot."""
        return math.fsum(self.sample(rng) for _ in range(m)) / m


class BernoulliArm(ArmSampler):
    def __init__(self, p: float, label: Hashable = None):
        self.p = float(p)
        self.label = label

    def sample(self, rng):
        return float(rng.random() < self.p)

    def sample_mean(self, rng, m):
        return int(rng.binomial(m, self.p)) / m


class ConstantArm(ArmSampler):
    def __init__(self, value: float, label: Hashable = None):
        self.value = float(value)
        self.label = label

    def sample(self, rng):
        return self.value

    def sample_mean(self, rng, m):
        return self.value


class DiscreteArm(ArmSampler):
    """Finite-support arm; the mean of m draws comes from one multinomial count."""

    def __init__(self, values: Sequence[float], probs: Sequence[float], label: Hashable = None):
        self.values = np.asarray(values, dtype=float)
        self.probs = np.asarray(probs, dtype=float)
        self.probs = self.probs / self.probs.sum()
        self.label = label

    @property
    def mean(self) -> float:
        return float(self.values @ self.probs)

    def sample(self, rng):
        return float(self.values[rng.choice(len(self.values), p=self.probs)])

    def sample_mean(self, rng, m):
        counts = rng.multinomial(m, self.probs)
        return float(counts @ self.values) / m


@dataclass
class BestArmResult:
    index: int
    samples: int
    rounds: int


def round_sample_size(eps_l: float, delta_l: float) -> int:
    return math.ceil((1.0 / (eps_l / 2.0) ** 2) * math.log(3.0 / delta_l))


def median_elimination(arms: Sequence[ArmSampler], epsilon: float, confidence: float,
                       rng: np.random.Generator) -> BestArmResult:
    """Returns an epsilon-optimal arm with probability at least 1 - confidence."""
    if not arms:
        raise ValueError("best-arm identification needs at least one arm")
    alive = list(range(len(arms)))
    eps_l, delta_l = epsilon / 4.0, confidence / 2.0
    samples = rounds = 0
    while len(alive) > 1:
        m = round_sample_size(eps_l, delta_l)
        means = {a: arms[a].sample_mean(rng, m) for a in alive}
        samples += m * len(alive)
        rounds += 1
        ranked = sorted(alive, key=lambda a: (-means[a], a))
        alive = sorted(ranked[: (len(ranked) + 1) // 2])
        eps_l, delta_l = 0.75 * eps_l, 0.5 * delta_l
    return BestArmResult(alive[0], samples, rounds)


def best_arm(arms: Sequence[ArmSampler], delta: float, rng: np.random.Generator) -> int:
    """Index whose expected mean is within delta of the best arm's mean."""
    return best_arm_result(arms, delta, rng).index


def best_arm_result(arms: Sequence[ArmSampler], delta: float,
                    rng: np.random.Generator) -> BestArmResult:
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return median_elimination(arms, delta / 2.0, delta / 2.0, rng)


def sample_budget(n: int, delta: float) -> int:
    """Exact sample count best_arm uses on n arms (it does not depend on rewards)."""
    alive, total = n, 0
    eps_l, delta_l = delta / 8.0, delta / 4.0
    while alive > 1:
        total += alive * round_sample_size(eps_l, delta_l)
        alive = (alive + 1) // 2
        eps_l, delta_l = 0.75 * eps_l, 0.5 * delta_l
    return total

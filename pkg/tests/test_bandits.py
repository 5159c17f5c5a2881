import math

import numpy as np
import pytest

from gspoisson.bandits import (SAMPLE_CONSTANT, ArmSampler, BernoulliArm, ConstantArm,
                               DiscreteArm, best_arm, best_arm_result, sample_budget)


class CountingBernoulli(ArmSampler):
    """Single-draw arm, so the sample count is observed directly."""

    def __init__(self, p):
        self.p = p
        self.draws = 0

    def sample(self, rng):
        self.draws += 1
        return float(rng.random() < self.p)


def test_single_arm():
    assert best_arm([ConstantArm(0.3)], 0.1, np.random.default_rng(0)) == 0


def test_empty_arm_list_rejected():
    with pytest.raises(ValueError):
        best_arm([], 0.1, np.random.default_rng(0))


def test_deterministic_arms_pick_best():
    rng = np.random.default_rng(1)
    arms = [ConstantArm(0.2), ConstantArm(0.9), ConstantArm(0.5)]
    assert all(best_arm(arms, 0.1, rng) == 1 for _ in range(200))


def test_ties_keep_lower_index():
    arms = [ConstantArm(0.5), ConstantArm(0.5)]
    assert best_arm(arms, 0.3, np.random.default_rng(0)) == 0


def test_two_bernoulli_pac():
    rng = np.random.default_rng(2)
    mus = [0.9, 0.1]
    arms = [BernoulliArm(p) for p in mus]
    got = np.array([mus[best_arm(arms, 0.2, rng)] for _ in range(500)])
    se = got.std(ddof=1) / math.sqrt(len(got)) if got.std() > 0 else 0.0
    assert got.mean() >= 0.7 - 3 * se


@pytest.mark.parametrize("n", [2, 8, 32])
@pytest.mark.parametrize("delta", [0.3, 0.1])
def test_sample_count_bound(n, delta):
    rng = np.random.default_rng(n)
    arms = [BernoulliArm(p) for p in rng.uniform(0, 1, size=n)]
    result = best_arm_result(arms, delta, rng)
    assert result.samples == sample_budget(n, delta)
    assert result.samples <= SAMPLE_CONSTANT * n * math.log(1 / delta) / delta**2


def test_instrumented_draws_match_budget():
    arms = [CountingBernoulli(p) for p in (0.2, 0.8, 0.5)]
    result = best_arm_result(arms, 0.3, np.random.default_rng(4))
    assert sum(a.draws for a in arms) == result.samples == sample_budget(3, 0.3)


def test_returned_index_valid():
    rng = np.random.default_rng(5)
    arms = [BernoulliArm(p) for p in rng.random(7)]
    for _ in range(20):
        assert 0 <= best_arm(arms, 0.3, rng) < 7


def test_discrete_arm_batch_mean_matches_law():
    arm = DiscreteArm([0.0, 0.5, 1.0], [0.2, 0.3, 0.5])
    rng = np.random.default_rng(6)
    means = np.array([arm.sample_mean(rng, 50) for _ in range(4000)])
    # per-batch variance is Var/50
    var = (np.array([0, 0.25, 1]) @ arm.probs) - arm.mean**2
    assert abs(means.mean() - arm.mean) <= 3 * math.sqrt(var / 50 / 4000)

import numpy as np
import pytest

from cpc.bandits.env import (BERNOULLI, GAUSSIAN, PRESETS, EnvSpec, Environment, RewardStream,
                             ArmDistribution, min_pairwise_gap, parse_reward, pseudo_regret,
                             random_instance, realized_regret, sample_reward)
from cpc.bandits.exceptions import ConfigError
from cpc.bandits.rng import Prng


@pytest.mark.parametrize('preset, arm', [('mu1', 3), ('mu2', 0), ('mu3', 2), ('mu4', 3)])
def test_preset_optimal_arms(preset, arm):
    assert Environment.from_means(PRESETS[preset]).optimal_arm == arm


def test_gaps_are_nonnegative_and_zero_at_the_optimum():
    env = Environment.from_means(PRESETS['mu3'])
    assert env.gaps.min() == 0.0
    assert env.gaps[env.optimal_arm] == 0.0


def test_environment_needs_two_arms():
    with pytest.raises(ValueError):
        Environment.from_means([0.5])


def test_arm_mean_must_be_in_unit_interval():
    with pytest.raises(ValueError):
        ArmDistribution(1.5)


def test_bernoulli_extremes():
    env = Environment.from_means([0.0, 1.0])
    rng = Prng(5)
    assert {sample_reward(env, 0, rng) for _ in range(200)} == {0.0}
    assert {sample_reward(env, 1, rng) for _ in range(200)} == {1.0}


def test_bernoulli_frequency():
    env = Environment.from_means([0.3, 0.7])
    rng = Prng(6)
    rewards = [sample_reward(env, 1, rng) for _ in range(20000)]
    assert np.mean(rewards) == pytest.approx(0.7, abs=0.015)


def test_gaussian_rewards_are_clipped():
    env = Environment.from_means([0.02, 0.5], GAUSSIAN, sigma=0.05)
    rng = Prng(7)
    low = [sample_reward(env, 0, rng) for _ in range(5000)]
    mid = [sample_reward(env, 1, rng) for _ in range(5000)]
    assert min(low) == 0.0
    assert max(low) <= 1.0
    assert np.mean(mid) == pytest.approx(0.5, abs=0.005)
    assert np.std(mid) == pytest.approx(0.05, abs=0.005)


def test_sample_reward_rejects_bad_arm():
    env = Environment.from_means([0.2, 0.4])
    with pytest.raises(ValueError):
        sample_reward(env, 2, Prng(1))


def test_random_instance_respects_min_gap():
    rng = Prng(8)
    for _ in range(5):
        env = random_instance(8, 0.07, rng)
        assert env.K == 8
        assert min_pairwise_gap(env.means) >= 0.07


def test_min_gap():
    assert Environment.from_means([0.5, 0.1, 0.45, 0.9]).min_gap == pytest.approx(0.05)
    assert min_pairwise_gap([0.2, 0.2, 0.7]) == 0.0


def test_random_instance_rejects_infeasible_gap():
    with pytest.raises(ValueError):
        random_instance(8, 0.2, Prng(1))


def test_pseudo_regret():
    env = Environment.from_means([0.1, 0.3, 0.5, 0.7])
    assert pseudo_regret([100, 100, 100, 9700], env, 10000) == pytest.approx(120.0)
    assert pseudo_regret([0, 0, 0, 50], env) == 0.0
    with pytest.raises(ValueError):
        pseudo_regret([100, 100, 100, 9600], env, 10000)
    with pytest.raises(ValueError):
        pseudo_regret([1, 2, 3], env)


def test_realized_regret():
    env = Environment.from_means([0.2, 0.6])
    assert realized_regret(50.0, env, 100) == pytest.approx(10.0)


def test_reward_stream_depends_only_on_arm_and_pull_count():
    env = Environment.from_means([0.4, 0.6, 0.5])
    a = RewardStream(env, 42, 3)
    b = RewardStream(env, 42, 3)
    only_first = [a(0) for _ in range(50)]
    interleaved = []
    for _ in range(50):
        b(1)
        interleaved.append(b(0))
        b(2)
    assert only_first == interleaved


def test_reward_streams_differ_between_experiments():
    env = Environment.from_means([0.5, 0.5])
    a = RewardStream(env, 42, 0)
    b = RewardStream(env, 42, 1)
    assert [a(0) for _ in range(64)] != [b(0) for _ in range(64)]


@pytest.mark.parametrize('text, reward, K, label', [
    ('mu1', 'bernoulli', 4, 'mu1'),
    ('mu3', 'gaussian', 8, 'mu3/gaussian:0.05'),
    ('random:6', 'bernoulli', 6, 'random:6:0'),
    ('random:8:0.07', 'gaussian:0.1', 8, 'random:8:0.07/gaussian:0.1'),
    ('0.2,0.4,0.9', 'bernoulli', 3, '0.2,0.4,0.9'),
])
def test_env_spec_parse(text, reward, K, label):
    spec = EnvSpec.parse(text, reward=reward)
    assert spec.K == K
    assert spec.label == label


def test_env_spec_random_needs_arms():
    with pytest.raises(ConfigError):
        EnvSpec.parse('random')
    assert EnvSpec.parse('random', arms=5).K == 5


@pytest.mark.parametrize('text', ['mu9', 'random:x', 'a,b'])
def test_env_spec_parse_errors(text):
    with pytest.raises(ConfigError):
        EnvSpec.parse(text, arms=4)


def test_env_spec_build():
    preset = EnvSpec.parse('mu2')
    assert preset.build(Prng(1)).means.tolist() == PRESETS['mu2']
    random = EnvSpec.parse('random:4')
    assert random.build(Prng(1)).means.tolist() != random.build(Prng(2)).means.tolist()


def test_parse_reward():
    assert parse_reward('bernoulli') == (BERNOULLI, None)
    assert parse_reward('gaussian') == (GAUSSIAN, 0.05)
    assert parse_reward('gaussian:0.2') == (GAUSSIAN, 0.2)
    with pytest.raises(ConfigError):
        parse_reward('bernoulli:0.1')
    with pytest.raises(ConfigError):
        parse_reward('poisson')

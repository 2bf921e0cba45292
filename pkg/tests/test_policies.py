import logging
import math

import numpy as np
import pytest

from cpc.bandits.datasets import ArmStats, BinTable
from cpc.bandits.env import Environment, sample_reward
from cpc.bandits.exceptions import ConfigError, ConsistencyError
from cpc.bandits.numeric import Precision
from cpc.bandits.policies import (PolicyConfig, PolicyState, SlotCounter, bin_index, kl_divergence,
                                  kl_upper_bound, memory_bits, policy_step, qf_bts_reference,
                                  qf_from_bins, qf_klucb, qf_sbts, qf_sbts_es, qf_sbts_essr, qf_ucb,
                                  select_arm, update_stats)
from cpc.bandits.rng import Prng


class FakeRng:
    """
    Hands out a fixed stream of uniforms
    """
    def __init__(self, values):
        self.values = list(values)
        self.draws = 0

    def next_unit(self):
        self.draws += 1
        return self.values.pop(0)

    def uniforms(self, count):
        out, self.values = np.array(self.values[:count]), self.values[count:]
        self.draws += count
        return out


def test_update_stats():
    stats = update_stats(ArmStats(2), 0, 1.0)
    assert stats.X.tolist() == [2.0, 1.0]
    assert stats.T.tolist() == [2, 1]
    update_stats(stats, 1, 0.0)
    assert stats.X.tolist() == [2.0, 1.0]
    assert stats.T.tolist() == [2, 2]
    update_stats(stats, 1, 0.37)
    assert stats.X[1] == pytest.approx(1.37)


@pytest.mark.parametrize('arm, reward', [(2, 1.0), (-1, 1.0), (0, 1.5), (0, -0.1)])
def test_update_stats_rejects_bad_arguments(arm, reward):
    with pytest.raises(ValueError):
        update_stats(ArmStats(2), arm, reward)


def test_select_arm():
    assert select_arm([0.1, 0.9, 0.3]) == 1
    assert select_arm([0.5, 0.5]) == 0
    assert select_arm(np.array([0.1, 0.9, 0.3]) * 7.0) == 1
    with pytest.raises(ValueError):
        select_arm([0.1, np.nan])
    with pytest.raises(ValueError):
        select_arm([])


def test_qf_ucb():
    stats = ArmStats(2, X=[2, 1], T=[4, 1])
    assert qf_ucb(stats, 10, alpha=2)[0] == pytest.approx(1.5730, abs=1e-4)
    assert qf_ucb(stats, 1).tolist() == [0.5, 1.0]
    shifted = qf_ucb(ArmStats(4), 1, alpha=2, log_shift=4)
    assert shifted == pytest.approx(np.full(4, 1 + math.sqrt(2 * math.log(5))))


def test_qf_ucb_bonus_shrinks_with_pulls():
    few = qf_ucb(ArmStats(1, X=[2], T=[4]), 100)[0] - 0.5
    many = qf_ucb(ArmStats(1, X=[4], T=[8]), 100)[0] - 0.5
    assert many < few


def test_qf_ucb_rejects_slot_zero():
    with pytest.raises(ValueError):
        qf_ucb(ArmStats(2), 0)


def test_kl_divergence():
    assert kl_divergence(0.5, 0.25) == pytest.approx(0.1438, abs=1e-4)
    assert kl_divergence(0.37, 0.37) == pytest.approx(0.0, abs=1e-15)
    assert kl_divergence(0.0, 0.3) == pytest.approx(-math.log(0.7))
    assert np.isfinite(kl_divergence(0.5, 0.0))


def test_kl_upper_bound():
    assert kl_upper_bound(np.array([0.3]), 0.0)[0] == 0.3
    budget = kl_divergence(0.5, 0.25)
    assert kl_upper_bound(np.array([0.5]), budget)[0] == pytest.approx(0.75, abs=1e-3)


def test_qf_klucb_contract():
    stats = ArmStats(3, X=[1, 5, 9], T=[3, 10, 10])
    n = 50
    q = qf_klucb(stats, n)
    budget = math.log(n) / stats.T
    assert (q >= stats.means).all()
    assert (kl_divergence(stats.means, q) <= budget + 1e-6).all()


def test_qf_klucb_first_slot_returns_means():
    stats = ArmStats(2, X=[1, 2], T=[2, 4])
    assert qf_klucb(stats, 1).tolist() == [0.5, 0.5]


def test_qf_sbts_picks_order_statistic():
    stats = ArmStats(1, X=[2], T=[4])
    rng = FakeRng([0.342, 0.012, 0.753, 0.553])
    assert qf_sbts(stats, rng).tolist() == [0.342]
    assert rng.draws == 4


def test_qf_sbts_with_all_successes_is_maximum():
    stats = ArmStats(1, X=[4], T=[4])
    assert qf_sbts(stats, FakeRng([0.342, 0.012, 0.753, 0.553])).tolist() == [0.753]


def test_qf_sbts_draws_sum_of_pulls():
    stats = ArmStats(3, X=[1, 2, 3], T=[4, 5, 6])
    rng = Prng(1)
    counter = SlotCounter()
    qf_sbts(stats, rng, counter)
    assert rng.draws == 15
    assert counter.comparisons == 4 * 2 + 5 * 3 + 6 * 3


def test_qf_bts_reference_rejects_fractional_successes():
    with pytest.raises(ValueError):
        qf_bts_reference(ArmStats(2, X=[1.5, 1], T=[2, 1]), Prng(1))


def test_qf_bts_reference_matches_beta_moments():
    K = 1000
    stats = ArmStats(K, X=np.full(K, 3), T=np.full(K, 8))
    rng = Prng(31)
    samples = np.concatenate([qf_bts_reference(stats, rng) for _ in range(20)])
    assert samples.mean() == pytest.approx(1 / 3, abs=0.005)
    assert samples.var() == pytest.approx(18 / 810, abs=0.002)


@pytest.mark.parametrize('p, L, expected', [(0.012, 10, 1), (0.342, 10, 4), (0.0, 7, 1),
                                            (0.9999, 10, 10), (1.0, 10, 10)])
def test_bin_index(p, L, expected):
    assert bin_index(p, L) == expected


def test_qf_sbts_es_worked_examples():
    stats = ArmStats(1, X=[2], T=[4])
    assert qf_sbts_es(stats, 10, FakeRng([0.342, 0.012, 0.753, 0.553])).tolist() == [0.35]
    assert qf_sbts_es(stats, 10, FakeRng([0.342, 0.012, 0.083, 0.553])).tolist() == [0.05]


def test_qf_sbts_es_single_bin():
    stats = ArmStats(2, X=[1, 3], T=[2, 5])
    assert qf_sbts_es(stats, 1, Prng(2)).tolist() == [0.5, 0.5]


def test_qf_from_bins():
    column = np.array([0, 1, 0, 0, 1, 1, 0, 0, 1, 1]).reshape(10, 1)
    counter = SlotCounter()
    assert qf_from_bins(column, [2], counter).tolist() == [0.45]
    assert counter.comparisons == 5


def test_qf_sbts_essr_first_slot():
    table = BinTable(10, 3)
    table.beta[:] = 7
    rng = Prng(1)
    q, table = qf_sbts_essr(ArmStats(3), table, None, rng)
    assert table.column_sums().tolist() == [1, 1, 1]
    assert rng.draws == 3
    assert q.tolist() == qf_sbts_es(ArmStats(3), 10, Prng(1)).tolist()


def test_qf_sbts_essr_replaces_one_sample_per_arm():
    K, L = 3, 10
    stats = ArmStats(K)
    rng = Prng(4)
    q, table = qf_sbts_essr(stats, BinTable(L, K), None, rng)
    update_stats(stats, 1, 1.0)
    draws = rng.draws
    q, table = qf_sbts_essr(stats, table, 1, rng)
    assert rng.draws - draws == 2 * K + 1
    assert table.column_sums().tolist() == stats.T.tolist()
    grid = (2 * np.arange(1, L + 1) - 1) / (2 * L)
    assert np.isin(q, grid).all()


def test_qf_sbts_essr_detects_broken_table():
    stats = ArmStats(2, T=[3, 1])
    with pytest.raises(ConsistencyError) as e:
        qf_sbts_essr(stats, BinTable(10, 2), 1, Prng(1))
    assert e.value.arm == 0


def test_qf_sbts_essr_tracks_the_posterior_of_an_idle_arm():
    # arm 1 is never played, so its column is only ever resampled
    stats = ArmStats(2, X=[1, 5], T=[1, 10])
    rng = Prng(21)
    q, table = qf_sbts_essr(stats, BinTable(20, 2), None, rng)
    idle = []
    for _ in range(4000):
        update_stats(stats, 0, 0.0)
        q, table = qf_sbts_essr(stats, table, 0, rng)
        idle.append(q[1])
    assert table.column_sums().tolist() == stats.T.tolist()
    assert np.mean(idle) == pytest.approx(5 / 11, abs=0.04)


def test_sbts_essr_invariants_over_a_run():
    K, L = 4, 20
    env = Environment.from_means([0.2, 0.4, 0.6, 0.8])
    policy = PolicyConfig('sbts-essr', L=L)
    stats, state = ArmStats(K), PolicyState(policy, K)
    rng, reward_rng = Prng(10), Prng(11)
    for n in range(1, 1001):
        arm, state = policy_step(policy, stats, state, n, rng)
        assert (state.table.column_sums() == stats.T).all()
        assert (state.table.beta >= 0).all()
        update_stats(stats, arm, sample_reward(env, arm, reward_rng))
    assert state.draws[0] == K
    assert set(state.draws[1:]) == {2 * K + 1}
    assert stats.T.sum() == 1000 + K


def test_sbts_essr_settles_on_the_best_arm():
    env = Environment.from_means([0.1, 0.3, 0.5, 0.7])
    policy = PolicyConfig('sbts-essr')
    stats, state = ArmStats(4), PolicyState(policy, 4)
    rng, reward_rng = Prng(12), Prng(13)
    for n in range(1, 3001):
        arm, state = policy_step(policy, stats, state, n, rng)
        update_stats(stats, arm, sample_reward(env, arm, reward_rng))
    assert stats.T[3] > 0.7 * 3000


def test_index_policies_play_every_arm_first():
    for kind in ('ucb', 'klucb'):
        policy = PolicyConfig(kind)
        stats, state = ArmStats(5), PolicyState(policy, 5)
        arms = []
        for n in range(1, 6):
            arm, state = policy_step(policy, stats, state, n, Prng(1))
            update_stats(stats, arm, 0.0)
            arms.append(arm)
        assert arms == [0, 1, 2, 3, 4]


def test_policy_step_ties_go_to_lowest_index():
    policy = PolicyConfig('ucb')
    stats = ArmStats(3, X=[2, 2, 2], T=[3, 3, 3])
    arm, _ = policy_step(policy, stats, PolicyState(policy, 3), 10, Prng(1))
    assert arm == 0


def test_policy_step_quantizes_qfs():
    policy = PolicyConfig('ucb', precision=Precision.parse('fixed:6:1'))
    stats = ArmStats(2, X=[5, 5.5], T=[10, 10])
    # QFs 0.5 + b and 0.55 + b round to the same half-integer
    arm, _ = policy_step(policy, stats, PolicyState(policy, 2), 3, Prng(1))
    assert arm == 0


def test_policy_config_parse_and_labels():
    policy = PolicyConfig.parse('sbts-es:10')
    assert (policy.kind, policy.L, policy.label) == ('sbts-es', 10, 'sbts-es:10')
    assert PolicyConfig.parse('sbts-essr').label == 'sbts-essr:20'
    assert PolicyConfig('ucb', precision=Precision.parse('f32')).label == 'ucb@f32'
    assert PolicyConfig('ucb').family == 'ucb'
    assert PolicyConfig('klucb').family == 'unit'


def test_policy_ids_differ_between_policies():
    assert PolicyConfig('ucb').policy_id != PolicyConfig('sbts').policy_id
    assert PolicyConfig('ucb').policy_id == PolicyConfig.parse('ucb').policy_id


@pytest.mark.parametrize('text', ['thompson', 'sbts-es:1', 'sbts-es:x'])
def test_policy_config_errors(text):
    with pytest.raises(ConfigError):
        PolicyConfig.parse(text)


def test_policy_config_warns_about_alpha(caplog):
    with caplog.at_level(logging.WARNING, logger='cpc.bandits.policies'):
        PolicyConfig('ucb', alpha=4.0)
    assert 'outside the recommended range' in caplog.text


def test_memory_bits():
    assert memory_bits('sbts', 6, 10000) == 32 * 6 * 10000
    assert memory_bits('sbts-essr', 6, 10000, L=20) == 20 * 6 * 14
    assert memory_bits('ucb', 6, 10000) == 384
    with pytest.raises(ValueError):
        memory_bits('thompson', 6, 10000)

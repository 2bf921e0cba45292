"""
Contains the oracle suite run by `cpc-bandits validate`

Each check compares an implementation against an independent reference (published MT19937
outputs, the Beta distribution, a brute-force schedule) or verifies an invariant over many
simulated slots. `run_checks()` returns one CheckResult per check; the sizes are arguments so the
test suite can run a reduced version.
"""

# Built-ins
import logging

# Third-party
import numpy as np
from scipy import stats as sps

# This package
from .datasets import ArmStats
from .env import Environment, random_instance, sample_reward
from .numeric import FixedFormat, quantize
from .policies import (PolicyConfig, PolicyState, SBTS, SBTS_ESSR, policy_step, qf_sbts,
                       qf_sbts_es, update_stats)
from .rimab import AggregatorConfig, EpochState, epoch_advance, rimab_run
from .rng import Prng, derive_seed

logger = logging.getLogger(__name__)

# Outputs of the reference MT19937 implementation seeded with 5489 (1-based positions)
MT_REFERENCE = {1: 3499211612, 2: 581869302, 3: 3890346734, 10000: 4123659995}

FROZEN_STATS = ((1, 1), (3, 8), (7, 10))
CHECK_FORMATS = (FixedFormat(27, 26), FixedFormat(11, 10), FixedFormat(6, 5))


class CheckResult:
    """
    Outcome of one validation check

    ### Parameters

    - name (string): check name
    - passed (bool): whether the check passed
    - detail (string): measured values
    """
    def __init__(self, name, passed, detail=''):
        self.name = name
        self.passed = bool(passed)
        self.detail = detail

    def __repr__(self):
        status = 'PASS' if self.passed else 'FAIL'
        return f'{status} {self.name}: {self.detail}'


def check_mt_reference():
    rng = Prng(5489)
    words = rng.u32_array(max(MT_REFERENCE))
    bad = {pos: int(words[pos - 1]) for pos, value in MT_REFERENCE.items()
           if int(words[pos - 1]) != value}
    return CheckResult('mt19937-reference', not bad,
                       f'mismatches at {sorted(bad)}' if bad else
                       f'{len(MT_REFERENCE)} reference outputs match')


def _frozen_samples(sampler, X, T, draws, arms=1000):
    """
    Collects at least `draws` QF samples for arms frozen at (X, T)
    """
    stats = ArmStats(arms, X=np.full(arms, X), T=np.full(arms, T))
    calls = -(-draws // arms)
    return np.concatenate([sampler(stats) for _ in range(calls)])[:draws]


def check_sbts_distribution(rng, draws, tolerance):
    """
    Kolmogorov-Smirnov distance between SBTS samples and Beta(X, T - X + 1)
    """
    worst = 0.0
    for X, T in FROZEN_STATS:
        samples = _frozen_samples(lambda s: qf_sbts(s, rng), X, T, draws)
        worst = max(worst, sps.kstest(samples, 'beta', args=(X, T - X + 1)).statistic)
    return CheckResult('sbts-beta-ks', worst < tolerance, f'max KS distance {worst:.5f}')


def check_sbts_es_bins(rng, draws, tolerance, L=20):
    """
    Bin frequencies of SBTS-ES against the Beta probability mass of every bin
    """
    edges = np.arange(L + 1) / L
    worst = 0.0
    for X, T in FROZEN_STATS:
        samples = _frozen_samples(lambda s: qf_sbts_es(s, L, rng), X, T, draws)
        bins = np.rint(samples * 2 * L).astype(np.int64) // 2
        observed = np.bincount(bins, minlength=L) / len(samples)
        expected = np.diff(sps.beta.cdf(edges, X, T - X + 1))
        worst = max(worst, float(np.abs(observed - expected).max()))
    return CheckResult('sbts-es-bin-mass', worst < tolerance, f'max bin error {worst:.5f}')


def check_essr_invariants(seed, slots, K=4, L=20):
    """
    SBTS-ESSR bin-table column sums and per-slot draw counts over a simulated run
    """
    env_rng = Prng(derive_seed(seed, 0))
    env = random_instance(K, 0.0, env_rng)
    policy = PolicyConfig(SBTS_ESSR, L=L)
    stats, state = ArmStats(K), PolicyState(policy, K)
    rng, reward_rng = Prng(derive_seed(seed, 1)), Prng(derive_seed(seed, 2))
    for n in range(1, slots + 1):
        arm, state = policy_step(policy, stats, state, n, rng)
        if not np.array_equal(state.table.column_sums(), stats.T):
            return CheckResult('essr-invariants', False, f'column sums broken at slot {n}')
        if n > 1 and state.draws[-1] != 2 * K + 1:
            return CheckResult('essr-invariants', False,
                               f'slot {n} used {state.draws[-1]} draws, expected {2 * K + 1}')
        update_stats(stats, arm, sample_reward(env, arm, reward_rng))
    return CheckResult('essr-invariants', True, f'{slots} slots, {2 * K + 1} draws per slot')


def check_sbts_draws(seed, slots, K=4):
    """
    SBTS consumes sum(T) draws in every slot
    """
    env = random_instance(K, 0.0, Prng(derive_seed(seed, 3)))
    policy = PolicyConfig(SBTS)
    stats, state = ArmStats(K), PolicyState(policy, K)
    rng, reward_rng = Prng(derive_seed(seed, 4)), Prng(derive_seed(seed, 5))
    for n in range(1, slots + 1):
        expected = int(stats.T.sum())
        arm, state = policy_step(policy, stats, state, n, rng)
        if state.draws[-1] != expected:
            return CheckResult('sbts-draws', False,
                               f'slot {n} used {state.draws[-1]} draws, expected {expected}')
        update_stats(stats, arm, sample_reward(env, arm, reward_rng))
    return CheckResult('sbts-draws', True, f'{slots} slots, draws = sum(T)')


def check_belief_normalization(seed, n_learn, K=4):
    env = Environment.from_means(np.linspace(0.2, 0.8, K))
    config = AggregatorConfig(n_learn=n_learn)
    trace = rimab_run(config, env, n_learn + 1, Prng(seed))
    error = float(np.abs(trace.beliefs.sum(axis=1) - 1.0).max())
    return CheckResult('belief-normalization', error < 1e-12, f'max deviation {error:.2e}')


def schedule_oracle(slots, A):
    """
    Brute-force active candidate per slot: blocks of 2^e slots for every candidate, e = 1, 2, ...
    """
    active = []
    e = 1
    while len(active) < slots:
        for alg in range(A):
            active.extend([alg] * 2 ** e)
        e += 1
    return active[:slots]


def check_epoch_schedule(slots, A=2):
    state = EpochState()
    active = []
    for _ in range(slots):
        active.append(state.alg)
        state = epoch_advance(state, A)
    mismatch = next((i + 1 for i, (a, b) in enumerate(zip(active, schedule_oracle(slots, A)))
                     if a != b), None)
    return CheckResult('epoch-schedule', mismatch is None,
                       f'first mismatch at slot {mismatch}' if mismatch else f'{slots} slots')


def check_quantize(rng, inputs):
    x = np.sort(rng.uniforms(inputs) * 4.0 - 1.0)
    for fmt in CHECK_FORMATS:
        q = quantize(x, fmt)
        if not np.array_equal(quantize(q, fmt), q):
            return CheckResult('quantize', False, f'{fmt} is not idempotent')
        if (np.diff(q) < 0).any():
            return CheckResult('quantize', False, f'{fmt} is not monotone')
    return CheckResult('quantize', True, f'{inputs} inputs per format')


def run_checks(draws=10 ** 5, slots=10 ** 5, schedule_slots=10 ** 4, quantize_inputs=10 ** 5,
               n_learn=500, seed=2024, ks_tolerance=0.01, bin_tolerance=0.01):
    """
    Runs every validation check

    ### Parameters

    - draws (int): samples per distribution check
    - slots (int): simulated slots for the SBTS-ESSR invariant check
    - schedule_slots (int): slots compared against the schedule oracle
    - quantize_inputs (int): random inputs per fixed-point format
    - n_learn (int): learning slots for the belief normalization check
    - seed (int): base seed
    - ks_tolerance (float): largest accepted KS distance
    - bin_tolerance (float): largest accepted bin-mass error

    ### Returns

    - list of CheckResult
    """
    results = [
        check_mt_reference(),
        check_sbts_distribution(Prng(derive_seed(seed, 10)), draws, ks_tolerance),
        check_sbts_es_bins(Prng(derive_seed(seed, 11)), draws, bin_tolerance),
        check_essr_invariants(derive_seed(seed, 12), slots),
        check_sbts_draws(derive_seed(seed, 13), min(slots, 2000)),
        check_belief_normalization(derive_seed(seed, 14), n_learn),
        check_epoch_schedule(schedule_slots),
        check_quantize(Prng(derive_seed(seed, 15)), quantize_inputs),
    ]
    for result in results:
        logger.info('%s', result)
    return results

"""
Contains the RI-MAB meta-algorithm

RI-MAB keeps several candidate policies (by default UCB and SBTS-ESSR) that share one set of arm
statistics. During a learning phase of N_learn slots the candidates take turns in blocks of
2, 2, 4, 4, 8, 8, ... slots (for A=2) and an exponential-weights belief over the candidates is
updated with the importance-weighted reward of every slot. After the learning phase RI-MAB commits
to the candidate with the highest belief and plays it alone until the horizon.

Candidates are 0-indexed: with the default candidates, 0 is UCB and 1 is SBTS-ESSR.

Examples
--------

    >>> from cpc.bandits.rimab import EpochState, epoch_advance
    >>> state, active = EpochState(), []
    >>> for _ in range(12):
    ...     active.append(state.alg)
    ...     state = epoch_advance(state, 2)
    >>> active
    [0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 1, 1]
"""

# Built-ins
import logging
import math

# Third-party
import numpy as np

# This package
from .datasets import ArmStats, RegretTrace
from .env import sample_reward
from .exceptions import ConfigError
from .numeric import quantize_vector
from .policies import (PolicyConfig, PolicyState, SlotCounter, UCB, SBTS_ESSR, add_samples,
                       compute_qf, memory_bits, select_arm, update_stats)

logger = logging.getLogger(__name__)

DEFAULT_N_LEARN = 500
VELCRO_LABEL = 'velcro-approx'


def default_candidates():
    return [PolicyConfig(UCB), PolicyConfig(SBTS_ESSR)]


class Belief:
    """
    Probability vector over the candidate algorithms

    ### Parameters

    - pi (array_like): the probabilities (must sum to 1)
    """
    def __init__(self, pi):
        self.pi = np.array(pi, dtype=np.float64)

    @classmethod
    def uniform(cls, A):
        return cls(np.full(A, 1.0 / A))

    @property
    def A(self):
        return len(self.pi)

    def copy(self):
        return Belief(self.pi)

    def __repr__(self):
        return f'Belief({self.pi.tolist()})'


class EpochState:
    """
    Position in the learning-phase schedule

    ### Parameters

    - e (int): epoch exponent, each block lasts 2^e slots
    - r (int): slots elapsed in the current block
    - alg (int): active candidate (0-based)
    """
    def __init__(self, e=1, r=0, alg=0):
        self.e = e
        self.r = r
        self.alg = alg

    @property
    def block_length(self):
        return 2 ** self.e

    def __eq__(self, other):
        return (isinstance(other, EpochState) and
                (self.e, self.r, self.alg) == (other.e, other.r, other.alg))

    def __repr__(self):
        return f'EpochState(e={self.e}, r={self.r}, alg={self.alg})'


def epoch_advance(state, A):
    """
    Advances the schedule by one slot

    After 2^e slots the next candidate becomes active; once every candidate has had a block, the
    block length doubles and the first candidate starts again.

    ### Parameters

    - state (EpochState): current position (not modified)
    - A (int): number of candidates

    ### Returns

    - EpochState: the position for the next slot
    """
    e, r, alg = state.e, state.r + 1, state.alg
    if r == 2 ** e:
        r = 0
        alg += 1
        if alg >= A:
            e += 1
            alg = 0
    return EpochState(e, r, alg)


def learning_rate(n, K, A):
    """
    Learning rate sqrt(ln A / (n K)) of slot n

    Examples
    --------

        >>> round(learning_rate(1, 4, 2), 5)
        0.41628
    """
    if n < 1:
        raise ValueError(f'slot index must be at least 1 (got {n})')
    return math.sqrt(math.log(A) / (n * K))


def belief_update(pi, alg, reward, eta):
    """
    Exponential-weights update of the active candidate's belief

    The reward is unbiased by the belief of the active candidate, the candidate's weight is
    multiplied by exp(eta * reward / pi[alg]) and the vector is renormalised. A zero reward leaves
    the belief unchanged.

    ### Parameters

    - pi (Belief): current belief (not modified)
    - alg (int): active candidate
    - reward (float): reward received in this slot
    - eta (float): learning rate

    ### Returns

    - Belief

    ### Raises

    - ValueError: if pi[alg] is 0

    Examples
    --------

        >>> belief = belief_update(Belief.uniform(2), 0, 1.0, learning_rate(1, 4, 2))
        >>> [round(float(p), 3) for p in belief.pi]
        [0.697, 0.303]
    """
    if pi.pi[alg] <= 0:
        raise ValueError(f'cannot unbias the reward of candidate {alg} with zero belief')
    if reward == 0:
        return pi.copy()
    weights = pi.pi.copy()
    weights[alg] *= math.exp(eta * reward / weights[alg])
    return Belief(weights / weights.sum())


def commit(pi):
    """
    Returns the candidate with the highest belief (lowest index on ties)
    """
    return int(np.argmax(pi.pi))


def refill_table(table, T, prev_arm, rng):
    """
    Tops up an SBTS-ESSR bin table after slots in which another candidate was active

    Each column is filled with freshly binned uniforms until it holds T[k] samples, except the
    column of `prev_arm`, which is left one short for the insertion SBTS-ESSR makes on entry. A
    table that was never used is empty, so its first refill draws every sample.

    ### Returns

    - int: number of samples added
    """
    deficit = table.targets(T) - table.column_sums()
    if prev_arm is not None:
        deficit[prev_arm] -= 1
    added = add_samples(table, np.maximum(deficit, 0), rng)
    if added:
        logger.debug('Refilled bin table with %d samples', added)
    return added


class CandidateState:
    """
    Private state of the candidates: a PolicyState (with its bin table) per SBTS-ESSR candidate
    """
    def __init__(self, candidates, K):
        self.states = {a: PolicyState(c, K) for a, c in enumerate(candidates)
                       if c.kind == SBTS_ESSR}

    def table(self, a):
        return self.states[a].table


def _candidate_qf(a, candidates, stats, n, prev_arm, tables, rng, counter):
    policy = candidates[a]
    if policy.kind == UCB:
        q = compute_qf(policy, stats, None, n, rng, counter, log_shift=stats.K)
    elif policy.kind == SBTS_ESSR:
        state = tables.states[a]
        if prev_arm is not None:
            refill_table(state.table, stats.T, prev_arm, rng)
        state.prev_arm = prev_arm
        q = compute_qf(policy, stats, state, n, rng, counter)
    else:
        q = compute_qf(policy, stats, None, n, rng, counter)
    return quantize_vector(q, policy.precision, policy.family)


def arm_sel(alg, stats, n, prev_arm, tables, rng, candidates=None, counter=None):
    """
    Selects an arm with the active candidate

    UCB candidates use ln(n + K) in their exploration bonus. SBTS-ESSR candidates work on their own
    persistent bin table, which is topped up first if other candidates played in between. All
    candidates read the shared statistics; none of them modifies X or T.

    ### Parameters

    - alg (int): active candidate
    - stats (ArmStats): shared statistics
    - n (int): current slot, 1-based
    - prev_arm (int or None): arm played in the previous slot (None in slot 1)
    - tables (CandidateState): per-candidate private state (updated)
    - rng (Prng): random number generator
    - candidates (list of PolicyConfig): the candidates (default UCB, SBTS-ESSR)

    ### Returns

    - int: chosen arm

    ### Raises

    - ValueError: if `alg` is not a valid candidate index
    """
    if candidates is None:
        candidates = default_candidates()
    if not 0 <= alg < len(candidates):
        raise ValueError(f'unknown candidate algorithm {alg} (have {len(candidates)})')
    if counter is None:
        counter = SlotCounter()
    q = _candidate_qf(alg, candidates, stats, n, prev_arm, tables, rng, counter)
    counter.add(stats.K - 1)
    return select_arm(q)


class AggregatorConfig:
    """
    Configuration of RI-MAB

    ### Parameters

    - candidates (list of PolicyConfig): candidate algorithms (default UCB and SBTS-ESSR)
    - n_learn (int): length of the learning phase (default 500)
    """
    def __init__(self, candidates=None, n_learn=DEFAULT_N_LEARN):
        self.candidates = list(candidates) if candidates is not None else default_candidates()
        if len(self.candidates) < 2:
            raise ConfigError('RI-MAB needs at least two candidate algorithms', key='candidates')
        if n_learn < 1:
            raise ConfigError(f'the learning phase must last at least one slot (got {n_learn})',
                              key='nlearn')
        self.n_learn = int(n_learn)

    @property
    def A(self):
        return len(self.candidates)

    @property
    def label(self):
        return 'rimab[' + ','.join(c.label for c in self.candidates) + ']'

    def to_dict(self):
        return {'candidates': [c.label for c in self.candidates], 'nlearn': self.n_learn}

    def memory_bits(self, K, N):
        """
        Storage of all resident candidates, in bits
        """
        return sum(memory_bits(c.kind, K, N, c.L) for c in self.candidates)

    def check_horizon(self, N):
        if N <= self.n_learn:
            raise ConfigError(f'horizon {N} must exceed the learning phase ({self.n_learn})',
                              key='horizon')


def _draw_reward(env, arm, rng, rewards):
    return rewards(arm) if rewards is not None else sample_reward(env, arm, rng)


def rimab_run(config, env, N, rng, rewards=None, label=None, index=0):
    """
    Runs RI-MAB for N slots

    ### Parameters

    - config (AggregatorConfig): the aggregator
    - env (Environment): the environment
    - N (int): horizon, must exceed `config.n_learn`
    - rng (Prng): the aggregator's random number generator
    - rewards (callable, optional): arm -> reward; defaults to sampling `env` with `rng`
    - label (string, optional): trace label (default `config.label`)
    - index (int): experiment index recorded in the trace

    ### Returns

    - RegretTrace: with the per-slot active candidate, the belief after every learning slot and
      the committed candidate
    """
    config.check_horizon(N)
    K, A = env.K, config.A
    stats = ArmStats(K)
    tables = CandidateState(config.candidates, K)
    gaps = env.gaps
    pi = Belief.uniform(A)
    schedule = EpochState()
    regret = np.empty(N)
    pulls = np.zeros(K, dtype=np.int64)
    active = np.empty(N, dtype=np.int64)
    beliefs = np.empty((config.n_learn, A))
    draws = np.empty(N, dtype=np.int64)
    comparisons = np.empty(N, dtype=np.int64)
    total = cumulative = 0.0
    prev_arm = None
    committed = None
    for n in range(1, N + 1):
        learning = n <= config.n_learn
        alg = schedule.alg if learning else committed
        counter = SlotCounter()
        draws_before = rng.draws
        arm = arm_sel(alg, stats, n, prev_arm, tables, rng, config.candidates, counter)
        draws[n - 1] = rng.draws - draws_before
        comparisons[n - 1] = counter.comparisons
        reward = _draw_reward(env, arm, rng, rewards)
        update_stats(stats, arm, reward, config.candidates[alg].fixed_format)
        if learning:
            pi = belief_update(pi, alg, reward, learning_rate(n, K, A))
            beliefs[n - 1] = pi.pi
            schedule = epoch_advance(schedule, A)
            if n == config.n_learn:
                committed = commit(pi)
                logger.debug('Experiment %d committed to %s (belief %s)', index,
                             config.candidates[committed].label, np.round(pi.pi, 4).tolist())
        active[n - 1] = alg
        pulls[arm] += 1
        total += reward
        cumulative += gaps[arm]
        regret[n - 1] = cumulative
        prev_arm = arm
    return RegretTrace(regret, pulls, env, total, draws=draws, comparisons=comparisons,
                       label=label or config.label, index=index, committed=committed,
                       active=active, beliefs=beliefs,
                       memory_bits=config.memory_bits(K, N))


def _sample_candidate(pi, rng):
    u = rng.next_unit()
    return min(int(np.searchsorted(np.cumsum(pi.pi), u, side='right')), pi.A - 1)


def velcro_run(config, env, N, rng, rewards=None, index=0):
    """
    Runs the all-candidates-resident comparison baseline ('velcro-approx')

    Every candidate computes its QFs in every slot (so every SBTS-ESSR table stays current), the
    played candidate is sampled from the belief, and the belief receives an exponential-weights
    update in every slot. There is no learning phase and no commitment; `config.n_learn` is
    ignored.

    ### Returns

    - RegretTrace: with the per-slot sampled candidate and the belief after every slot
    """
    K, A = env.K, config.A
    stats = ArmStats(K)
    tables = CandidateState(config.candidates, K)
    gaps = env.gaps
    pi = Belief.uniform(A)
    regret = np.empty(N)
    pulls = np.zeros(K, dtype=np.int64)
    active = np.empty(N, dtype=np.int64)
    beliefs = np.empty((N, A))
    draws = np.empty(N, dtype=np.int64)
    comparisons = np.empty(N, dtype=np.int64)
    total = cumulative = 0.0
    prev_arm = None
    for n in range(1, N + 1):
        counter = SlotCounter()
        draws_before = rng.draws
        choices = [select_arm(_candidate_qf(a, config.candidates, stats, n, prev_arm, tables,
                                            rng, counter))
                   for a in range(A)]
        alg = _sample_candidate(pi, rng)
        arm = choices[alg]
        counter.add(A * (K - 1))
        draws[n - 1] = rng.draws - draws_before
        comparisons[n - 1] = counter.comparisons
        reward = _draw_reward(env, arm, rng, rewards)
        update_stats(stats, arm, reward, config.candidates[alg].fixed_format)
        pi = belief_update(pi, alg, reward, learning_rate(n, K, A))
        beliefs[n - 1] = pi.pi
        active[n - 1] = alg
        pulls[arm] += 1
        total += reward
        cumulative += gaps[arm]
        regret[n - 1] = cumulative
        prev_arm = arm
    return RegretTrace(regret, pulls, env, total, draws=draws, comparisons=comparisons,
                       label=VELCRO_LABEL, index=index, active=active, beliefs=beliefs,
                       memory_bits=config.memory_bits(K, N))

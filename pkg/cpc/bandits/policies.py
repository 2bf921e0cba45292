"""
Contains the single-algorithm arm-selection policies

Every policy computes a quality factor (QF) per arm each slot and plays the arm with the highest
QF (lowest index on ties). The policies share the same statistics, cumulative reward X and pull
count T per arm (`datasets.ArmStats`):

- ucb: empirical mean plus the exploration bonus sqrt(alpha * ln n / T)
- klucb: largest mean whose Bernoulli KL divergence from X/T fits the budget (ln n + c ln ln n)/T
- bts-ref: Beta(X, T - X + 1) sample, obtained as the X-th smallest of T uniforms
- sbts: the same order-statistic construction, kept as its own policy for its cost counters
- sbts-es: T uniforms counted into L bins; the QF is the midpoint of the bin holding the X-th
  sample
- sbts-essr: like sbts-es, but the bin table persists across slots and each slot replaces a single
  sample per arm

Examples
--------

    >>> from cpc.bandits.datasets import ArmStats
    >>> from cpc.bandits.policies import qf_ucb, select_arm
    >>> stats = ArmStats(2, X=[2, 1], T=[4, 1])
    >>> round(float(qf_ucb(stats, 10, alpha=2)[0]), 4)
    1.573
    >>> select_arm([0.1, 0.9, 0.3])
    1
"""

# Built-ins
import logging
import math
import zlib

# Third-party
import numpy as np
from scipy.special import xlogy

# This package
from .datasets import BinTable
from .exceptions import ConfigError
from .numeric import Precision, quantize_accumulator, quantize_vector

logger = logging.getLogger(__name__)

UCB = 'ucb'
KLUCB = 'klucb'
BTS_REF = 'bts-ref'
SBTS = 'sbts'
SBTS_ES = 'sbts-es'
SBTS_ESSR = 'sbts-essr'
POLICY_KINDS = (UCB, KLUCB, BTS_REF, SBTS, SBTS_ES, SBTS_ESSR)
BINNED_KINDS = (SBTS_ES, SBTS_ESSR)
INDEX_KINDS = (UCB, KLUCB)

DEFAULT_ALPHA = 2.0
DEFAULT_KLUCB_C = 0.0
DEFAULT_BINS = 20
KL_EPS = 1e-12
KLUCB_ITERATIONS = 32


class SlotCounter:
    """
    Counts the comparisons made while selecting the arm of one slot
    """
    def __init__(self):
        self.comparisons = 0

    def add(self, count):
        self.comparisons += int(count)


def _count(counter, comparisons):
    if counter is not None:
        counter.add(comparisons)


def _sort_comparisons(m):
    # m * ceil(log2 m): comparison-sort model for an array of m values
    return m * (m - 1).bit_length() if m > 1 else 0


def update_stats(stats, arm, reward, fmt=None):
    """
    Adds a reward to the played arm: X[arm] += reward, T[arm] += 1

    ### Parameters

    - stats (ArmStats): statistics to update (modified in place and returned)
    - arm (int): played arm
    - reward (float): received reward, in [0, 1]
    - fmt (FixedFormat, optional): when given, X[arm] is rounded to its fraction bits

    ### Returns

    - ArmStats

    ### Raises

    - ValueError: if the arm or the reward is out of range
    """
    if not 0 <= arm < stats.K:
        raise ValueError(f'arm index {arm} out of range for K={stats.K}')
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f'reward must be in [0, 1] (got {reward})')
    stats.X[arm] += reward
    stats.T[arm] += 1
    if fmt is not None:
        stats.X[arm] = quantize_accumulator(stats.X[arm], fmt)
    return stats


def select_arm(q):
    """
    Returns the index of the highest QF, the lowest index among ties

    ### Raises

    - ValueError: if q is empty or contains NaN
    """
    q = np.asarray(q, dtype=np.float64)
    if q.size == 0:
        raise ValueError('cannot select an arm from an empty QF vector')
    if np.isnan(q).any():
        raise ValueError('QF vector contains NaN')
    return int(np.argmax(q))


def qf_ucb(stats, n, alpha=DEFAULT_ALPHA, log_shift=0):
    """
    UCB quality factors X/T + sqrt(alpha * ln(n + log_shift) / T)

    ### Parameters

    - stats (ArmStats): arm statistics
    - n (int): current slot (1-based)
    - alpha (float): exploration factor
    - log_shift (int): added to n inside the logarithm (0 standalone, K inside RI-MAB)
    """
    if n < 1:
        raise ValueError(f'slot index must be at least 1 (got {n})')
    return stats.X / stats.T + np.sqrt(alpha * math.log(n + log_shift) / stats.T)


def kl_divergence(p, q, eps=KL_EPS):
    """
    Bernoulli KL divergence d(p, q), with 0 * ln(0 / .) taken as 0

    q is clamped to [eps, 1 - eps].

    Examples
    --------

        >>> round(float(kl_divergence(0.5, 0.25)), 4)
        0.1438
        >>> float(kl_divergence(0.3, 0.3))
        0.0
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.clip(np.asarray(q, dtype=np.float64), eps, 1.0 - eps)
    return xlogy(p, p / q) + xlogy(1.0 - p, (1.0 - p) / (1.0 - q))


def kl_upper_bound(p_hat, budget, iterations=KLUCB_ITERATIONS):
    """
    Largest q in [p_hat, 1] with d(p_hat, q) <= budget, by bisection

    ### Parameters

    - p_hat (array_like): empirical means
    - budget (array_like): divergence budgets, same shape as p_hat
    - iterations (int): number of bisection steps

    ### Returns

    - array: the bounds (the lower end of the final bracket, so always feasible); exactly p_hat
      where the budget is 0
    """
    p_hat = np.clip(np.asarray(p_hat, dtype=np.float64), 0.0, 1.0)
    budget = np.broadcast_to(np.asarray(budget, dtype=np.float64), p_hat.shape)
    lo = p_hat.copy()
    hi = np.ones_like(p_hat)
    for _ in range(iterations):
        mid = (lo + hi) / 2.0
        feasible = kl_divergence(p_hat, mid) <= budget
        lo = np.where(feasible, mid, lo)
        hi = np.where(feasible, hi, mid)
    return np.where(budget > 0, lo, p_hat)


def qf_klucb(stats, n, c=DEFAULT_KLUCB_C, counter=None):
    """
    KL-UCB quality factors: the largest q >= X/T with d(X/T, q) <= (ln n + c ln ln n) / T

    ln ln n is taken as 0 for n < 3.
    """
    if n < 1:
        raise ValueError(f'slot index must be at least 1 (got {n})')
    log_n = math.log(n)
    loglog_n = math.log(log_n) if n >= 3 else 0.0
    budget = (log_n + c * loglog_n) / stats.T
    _count(counter, KLUCB_ITERATIONS * stats.K)
    return kl_upper_bound(stats.X / stats.T, budget)


def _integer_successes(stats):
    X = stats.X
    if not np.array_equal(X, np.round(X)):
        raise ValueError('order-statistic sampling needs integer cumulative rewards '
                         '(Bernoulli environments only)')
    X = X.astype(np.int64)
    if (X < 1).any():
        raise ValueError('cumulative rewards X must be at least 1')
    return X


def _order_statistic_qf(stats, rng, counter):
    X = _integer_successes(stats)
    samples = rng.uniforms(int(stats.T.sum()))
    q = np.empty(stats.K)
    start = 0
    for k, m in enumerate(stats.T):
        q[k] = np.sort(samples[start:start + m])[X[k] - 1]
        _count(counter, _sort_comparisons(int(m)))
        start += m
    return q


def qf_bts_reference(stats, rng, counter=None):
    """
    Reference Thompson-sampling QFs: one Beta(X, T - X + 1) sample per arm

    Draws T[k] uniforms per arm, sorts them and returns the X[k]-th smallest, which is exactly
    Beta(X, T - X + 1) distributed.

    ### Raises

    - ValueError: if X is not integer (Bernoulli environments only)
    """
    return _order_statistic_qf(stats, rng, counter)


def qf_sbts(stats, rng, counter=None):
    """
    SBTS quality factors (same procedure as `qf_bts_reference`)

    Consumes sum(T) uniform draws per slot.
    """
    return _order_statistic_qf(stats, rng, counter)


def bin_index(p, L):
    """
    Returns the 1-based bin l with (l - 1)/L <= p < l/L; p >= 1 is clamped to bin L

    Examples
    --------

        >>> bin_index(0.342, 10), bin_index(0.012, 10), bin_index(0.0, 10)
        (4, 1, 1)
    """
    index = np.clip(np.floor(np.asarray(p, dtype=np.float64) * L).astype(np.int64) + 1, 1, L)
    if np.ndim(p) == 0:
        return int(index)
    return index


def qf_from_bins(beta, X, counter=None):
    """
    QF per arm from a bin table: the midpoint (2l - 1)/(2L) of the first bin l whose prefix sum
    of column k reaches X[k]

    ### Parameters

    - beta (array): L x K bin counts
    - X (array_like): cumulative rewards (may be fractional)

    Examples
    --------

        >>> import numpy as np
        >>> column = np.array([[0], [1], [0], [0], [1], [1], [0], [0], [1], [1]])
        >>> float(qf_from_bins(column, [2])[0])
        0.45
    """
    beta = np.asarray(beta)
    L = beta.shape[0]
    prefix = np.cumsum(beta, axis=0)
    q_index = (prefix < np.asarray(X, dtype=np.float64)).sum(axis=0) + 1
    _count(counter, q_index.sum())
    return (2.0 * q_index - 1.0) / (2.0 * L)


def add_samples(table, counts, rng):
    """
    Bins `counts[k]` fresh uniforms into column k of `table` (in arm order)

    ### Returns

    - int: number of samples added
    """
    counts = np.asarray(counts, dtype=np.int64)
    added = int(counts.sum())
    if added:
        samples = rng.uniforms(added)
        arms = np.repeat(np.arange(table.K), counts)
        np.add.at(table.beta, (bin_index(samples, table.L) - 1, arms), 1)
    return added


def es_bin_table(stats, L, rng):
    """
    Draws T[k] fresh uniforms per arm and counts them into a new L x K BinTable
    """
    table = BinTable(L, stats.K)
    add_samples(table, stats.T, rng)
    return table


def qf_sbts_es(stats, L, rng, counter=None):
    """
    SBTS-ES quality factors

    A fresh histogram of T[k] uniforms over L bins is built for each arm every slot, and the QF is
    the midpoint of the bin holding the X[k]-th smallest sample.
    """
    return qf_from_bins(es_bin_table(stats, L, rng).beta, stats.X, counter)


def qf_sbts_essr(stats, table, prev_arm, rng, counter=None):
    """
    SBTS-ESSR quality factors

    Column k of the persistent table holds T[k] binned uniforms. On the first slot (`prev_arm` is
    None) the table is refilled from scratch, exactly as SBTS-ES would. On every later slot one
    uniform is binned into the column of the previously played arm (whose T grew by one), then
    for every arm one of its T[k] samples, chosen uniformly, is removed and a fresh uniform is
    inserted. Each column therefore always holds T[k] uniforms, like the histogram SBTS-ES
    rebuilds, while a slot after the first uses exactly 2K + 1 draws.

    ### Parameters

    - stats (ArmStats): arm statistics (T already includes the previous slot's pull)
    - table (BinTable): persistent bin table (modified in place)
    - prev_arm (int or None): arm played in the previous slot
    - rng (Prng): random number generator

    ### Returns

    - (array, BinTable): the QFs and the updated table

    ### Raises

    - ConsistencyError: if a column does not hold T[k] samples after the previous arm's insertion
    """
    L = table.L
    if prev_arm is None:
        table.clear()
        add_samples(table, stats.T, rng)
    else:
        table.beta[bin_index(rng.next_unit(), L) - 1, prev_arm] += 1
        table.check(stats.T)
        for k in range(table.K):
            # the r-th sample in bin order sits in the first bin whose prefix sum reaches r
            r = rng.next_int(1, int(stats.T[k]))
            s = int(np.searchsorted(np.cumsum(table.beta[:, k]), r))
            _count(counter, s + 1)
            table.beta[s, k] -= 1
            table.beta[bin_index(rng.next_unit(), L) - 1, k] += 1
    return qf_from_bins(table.beta, stats.X, counter), table


def memory_bits(kind, K, N, L=DEFAULT_BINS):
    """
    Storage a policy needs for its per-arm state, in bits

    SBTS keeps up to N 32-bit uniforms per arm, the binned variants keep L counters of
    ceil(log2(N + 1)) bits per arm, and the index policies keep a 32-bit X and T per arm.

    Examples
    --------

        >>> memory_bits('sbts', 6, 10000), memory_bits('sbts-essr', 6, 10000, L=20)
        (1920000, 1680)
    """
    if kind in (SBTS, BTS_REF):
        return 32 * K * N
    if kind in BINNED_KINDS:
        return L * K * math.ceil(math.log2(N + 1))
    if kind in INDEX_KINDS:
        return 2 * 32 * K
    raise ValueError(f'unknown policy kind {kind!r}')


class PolicyConfig:
    """
    Configuration of a single-algorithm policy

    ### Parameters

    - kind (string): one of POLICY_KINDS
    - alpha (float): UCB exploration factor (default 2)
    - c (float): KL-UCB constant (default 0)
    - L (int): number of bins for sbts-es/sbts-essr (default 20)
    - precision (Precision): precision the QFs are held in (default f64)
    """
    def __init__(self, kind, alpha=DEFAULT_ALPHA, c=DEFAULT_KLUCB_C, L=DEFAULT_BINS,
                 precision=None):
        if kind not in POLICY_KINDS:
            raise ConfigError(f'unknown policy {kind!r}, must be one of {POLICY_KINDS}',
                              key='policy')
        if kind in BINNED_KINDS and L < 2:
            raise ConfigError(f'{kind} needs at least 2 bins (got {L})', key='beta_bins')
        if kind == UCB and not 0.5 <= alpha <= 2.0:
            logger.warning('UCB exploration factor %s is outside the recommended range [0.5, 2]',
                           alpha)
        self.kind = kind
        self.alpha = float(alpha)
        self.c = float(c)
        self.L = int(L)
        self.precision = precision if precision is not None else Precision()

    @classmethod
    def parse(cls, text, **defaults):
        """
        Parses a policy name with an optional ':L' bin-count suffix, e.g. 'sbts-es:10'

        Examples
        --------

            >>> PolicyConfig.parse('sbts-es:10').L
            10
            >>> PolicyConfig.parse('ucb', alpha=1.0).label
            'ucb'
        """
        kind, _, bins = text.strip().partition(':')
        if bins:
            try:
                defaults['L'] = int(bins)
            except ValueError:
                raise ConfigError(f'malformed bin count in {text!r}', key='policy')
        return cls(kind, **defaults)

    @property
    def family(self):
        return 'ucb' if self.kind == UCB else 'unit'

    @property
    def fixed_format(self):
        return self.precision.format_for(self.family)

    @property
    def base_label(self):
        return f'{self.kind}:{self.L}' if self.kind in BINNED_KINDS else self.kind

    @property
    def label(self):
        label = self.base_label
        if self.precision.mode != 'f64':
            label += f'@{self.precision.label}'
        return label

    @staticmethod
    def stream_id(label):
        # Stable across processes, unlike hash()
        return zlib.crc32(label.encode('utf-8'))

    @property
    def policy_id(self):
        """
        Id of the policy's random stream; the precision is left out so that runs of one policy at
        different precisions draw the same uniforms
        """
        return self.stream_id(self.base_label)

    def with_precision(self, precision):
        return PolicyConfig(self.kind, self.alpha, self.c, self.L, precision)

    def to_dict(self):
        return {'kind': self.kind, 'alpha': self.alpha, 'c': self.c, 'L': self.L,
                'precision': self.precision.label}

    def __repr__(self):
        return f'PolicyConfig({self.label!r})'


class PolicyState:
    """
    Policy-private state of one experiment: the SBTS-ESSR bin table, the previously played arm and
    the per-slot draw and comparison counts

    ### Parameters

    - policy (PolicyConfig): the policy
    - K (int): number of arms
    """
    def __init__(self, policy, K):
        self.table = BinTable(policy.L, K) if policy.kind == SBTS_ESSR else None
        self.prev_arm = None
        self.draws = []
        self.comparisons = []


def compute_qf(policy, stats, state, n, rng, counter=None, log_shift=0):
    """
    Computes the raw (unquantized) QF vector of a policy for slot n
    """
    kind = policy.kind
    if kind == UCB:
        return qf_ucb(stats, n, policy.alpha, log_shift)
    if kind == KLUCB:
        return qf_klucb(stats, n, policy.c, counter)
    if kind == BTS_REF:
        return qf_bts_reference(stats, rng, counter)
    if kind == SBTS:
        return qf_sbts(stats, rng, counter)
    if kind == SBTS_ES:
        return qf_sbts_es(stats, policy.L, rng, counter)
    q, state.table = qf_sbts_essr(stats, state.table, state.prev_arm, rng, counter)
    return q


def policy_step(policy, stats, state, n, rng):
    """
    Selects the arm of slot n

    UCB and KL-UCB play arm n - 1 during slots 1..K; afterwards (and for every slot of the TS
    family) the QF vector is computed, rounded to the policy's precision and maximised.

    ### Parameters

    - policy (PolicyConfig): the policy
    - stats (ArmStats): shared arm statistics
    - state (PolicyState): policy-private state (updated)
    - n (int): current slot, 1-based
    - rng (Prng): the policy's random number generator

    ### Returns

    - (int, PolicyState): chosen arm and updated state
    """
    counter = SlotCounter()
    draws_before = rng.draws
    if policy.kind in INDEX_KINDS and n <= stats.K:
        arm = n - 1
    else:
        q = compute_qf(policy, stats, state, n, rng, counter)
        q = quantize_vector(q, policy.precision, policy.family)
        arm = select_arm(q)
        counter.add(stats.K - 1)
    state.prev_arm = arm
    state.draws.append(rng.draws - draws_before)
    state.comparisons.append(counter.comparisons)
    return arm, state

"""
Defines arm reward distributions, bandit environments and regret

An `Environment` is a list of `ArmDistribution`s. Rewards are always in [0, 1]: Bernoulli arms
return 0 or 1, Gaussian arms return the mean plus Gaussian noise, clipped to [0, 1].

Examples
--------

    >>> from cpc.bandits.env import Environment, pseudo_regret
    >>> env = Environment.from_means([0.1, 0.3, 0.5, 0.7])
    >>> env.optimal_arm
    3
    >>> round(pseudo_regret([100, 100, 100, 9700], env, 10000), 6)
    120.0
"""

# Built-ins
import logging

# Third-party
import numpy as np

# This package
from .exceptions import ConfigError
from .rng import Prng, derive_seed

logger = logging.getLogger(__name__)

BERNOULLI = 'bernoulli'
GAUSSIAN = 'gaussian'
REWARD_KINDS = (BERNOULLI, GAUSSIAN)

DEFAULT_SIGMA = 0.05
MAX_INSTANCE_TRIES = 10 ** 6

# Stream ids used when deriving seeds from (base_seed, experiment_index)
ENV_STREAM = 0
REWARD_STREAM = 1

PRESETS = {
    'mu1': [0.1, 0.3, 0.5, 0.7],
    'mu2': [0.54, 0.53, 0.52, 0.51],
    'mu3': [0.1, 0.5, 0.8, 0.7, 0.4, 0.2, 0.6, 0.3],
    'mu4': [0.21, 0.22, 0.26, 0.28, 0.24, 0.25, 0.27, 0.23],
}


class ArmDistribution:
    """
    Reward distribution of a single arm

    ### Parameters

    - mean (float): mean reward, in [0, 1]
    - kind (string): 'bernoulli' (default) or 'gaussian'
    - sigma (float): standard deviation of the Gaussian noise (Gaussian arms only)
    """
    def __init__(self, mean, kind=BERNOULLI, sigma=None):
        if kind not in REWARD_KINDS:
            raise ValueError(f'unknown reward kind {kind!r}, must be one of {REWARD_KINDS}')
        if not 0.0 <= mean <= 1.0:
            raise ValueError(f'arm mean must be in [0, 1] (got {mean})')
        if kind == GAUSSIAN:
            sigma = DEFAULT_SIGMA if sigma is None else sigma
            if not sigma > 0:
                raise ValueError(f'sigma must be positive (got {sigma})')
        elif sigma is not None:
            raise ValueError('sigma is only valid for Gaussian arms')
        self.mean = float(mean)
        self.kind = kind
        self.sigma = None if sigma is None else float(sigma)

    def __repr__(self):
        if self.kind == GAUSSIAN:
            return f'ArmDistribution({self.mean}, {self.kind!r}, sigma={self.sigma})'
        return f'ArmDistribution({self.mean}, {self.kind!r})'


class Environment:
    """
    A stationary K-armed bandit environment

    Environments never change after construction, so they can be shared freely; only the `Prng`
    used to sample rewards is mutated.

    ### Parameters

    - arms (list of ArmDistribution): the K >= 2 arms
    """
    def __init__(self, arms):
        if len(arms) < 2:
            raise ValueError(f'an environment needs at least 2 arms (got {len(arms)})')
        self.arms = tuple(arms)
        self.means = np.array([arm.mean for arm in self.arms])
        self.means.setflags(write=False)

    @classmethod
    def from_means(cls, means, kind=BERNOULLI, sigma=None):
        """
        Builds an environment where every arm has the same reward kind
        """
        return cls([ArmDistribution(mean, kind, sigma) for mean in means])

    @property
    def K(self):
        return len(self.arms)

    @property
    def optimal_mean(self):
        return float(self.means.max())

    @property
    def optimal_arm(self):
        # np.argmax returns the lowest index on ties
        return int(np.argmax(self.means))

    @property
    def gaps(self):
        return self.optimal_mean - self.means

    @property
    def min_gap(self):
        return min_pairwise_gap(self.means)

    @property
    def kind(self):
        kinds = {arm.kind for arm in self.arms}
        return kinds.pop() if len(kinds) == 1 else 'mixed'

    def __repr__(self):
        return f'Environment(K={self.K}, means={self.means.tolist()}, kind={self.kind!r})'


def sample_reward(env, arm, rng):
    """
    Draws one reward from an arm

    Bernoulli arms draw a uniform p from `rng` and return 1 when p < mean (p is in [0, 1), so a
    mean of 1 always pays and a mean of 0 never does). Gaussian arms return mean + sigma * z,
    clipped to [0, 1].

    ### Parameters

    - env (Environment): environment to sample from
    - arm (int): arm index, 0 <= arm < K
    - rng (Prng): random number generator (mutated)

    ### Returns

    - float: reward in [0, 1]

    ### Raises

    - ValueError: if the arm index is out of range
    """
    if not 0 <= arm < env.K:
        raise ValueError(f'arm index {arm} out of range for K={env.K}')
    dist = env.arms[arm]
    if dist.kind == BERNOULLI:
        return 1.0 if rng.next_unit() < dist.mean else 0.0
    return min(1.0, max(0.0, dist.mean + dist.sigma * rng.next_normal()))


def random_instance(K, min_gap, rng, kind=BERNOULLI, sigma=None):
    """
    Draws K arm means uniformly from [0, 1] with every pairwise gap at least `min_gap`

    Rejection sampling: whole K-tuples are redrawn until the gap condition holds, up to
    `MAX_INSTANCE_TRIES` attempts.

    ### Parameters

    - K (int): number of arms (>= 2)
    - min_gap (float): minimum difference between any two means
    - rng (Prng): random number generator (mutated)
    - kind (string): reward kind of the arms
    - sigma (float): Gaussian noise level (Gaussian arms only)

    ### Returns

    - Environment

    ### Raises

    - ValueError: if K * min_gap > 1 or min_gap < 0
    - ConfigError: if no instance was found within the retry cap
    """
    if K < 2:
        raise ValueError(f'K must be at least 2 (got {K})')
    if min_gap < 0 or K * min_gap > 1:
        raise ValueError(f'infeasible minimum gap {min_gap} for K={K} arms')
    for attempt in range(MAX_INSTANCE_TRIES):
        means = rng.uniforms(K)
        if min_gap == 0 or min_pairwise_gap(means) >= min_gap:
            logger.debug('Random instance K=%s min_gap=%s accepted after %s tries', K, min_gap,
                         attempt + 1)
            return Environment.from_means(means, kind, sigma)
    raise ConfigError(f'no random instance with K={K} and min_gap={min_gap} found after '
                      f'{MAX_INSTANCE_TRIES} tries', key='min_gap')


def pseudo_regret(counts, env, N=None):
    """
    Returns N * mu_star - sum_k T_k * mu_k, the pseudo-regret of a pull-count vector

    ### Parameters

    - counts (array_like): number of times each arm was played
    - env (Environment): environment the counts were collected in
    - N (int): horizon; defaults to sum(counts)

    ### Raises

    - ValueError: if the counts do not sum to N or have the wrong length
    """
    counts = np.asarray(counts)
    if counts.shape != (env.K,):
        raise ValueError(f'expected {env.K} pull counts (got shape {counts.shape})')
    total = int(counts.sum())
    if N is None:
        N = total
    if total != N:
        raise ValueError(f'pull counts sum to {total}, not to the horizon N={N}')
    return float(np.dot(counts, env.gaps))


def realized_regret(total_reward, env, N):
    """
    Returns N * mu_star minus the reward actually collected (first form of the regret)
    """
    return N * env.optimal_mean - total_reward


class RewardStream:
    """
    Per-arm reward generator for paired experiments

    Each arm owns a `Prng` seeded from (base_seed, experiment_index, arm), so the j-th pull of an
    arm returns the same reward no matter which policy pulls it or what else that policy draws.

    ### Parameters

    - env (Environment): environment to sample from
    - base_seed (int): the batch's base seed
    - index (int): experiment index
    """
    def __init__(self, env, base_seed, index):
        self.env = env
        self.rngs = [Prng(derive_seed(base_seed, index, REWARD_STREAM, arm))
                     for arm in range(env.K)]

    def __call__(self, arm):
        if not 0 <= arm < self.env.K:
            raise ValueError(f'arm index {arm} out of range for K={self.env.K}')
        return sample_reward(self.env, arm, self.rngs[arm])


class EnvSpec:
    """
    Describes how to build the environment of each experiment

    Exactly one of `preset`, `means` or `K` is used: a named preset ('mu1' ... 'mu4'), explicit
    means, or K random means with a minimum pairwise gap (redrawn for every experiment).

    ### Parameters

    - preset (string): preset name
    - means (list of floats): explicit arm means
    - K (int): number of random arms
    - min_gap (float): minimum gap between random means (default 0)
    - kind (string): reward kind ('bernoulli' or 'gaussian')
    - sigma (float): Gaussian noise level (default 0.05 for Gaussian rewards)
    """
    def __init__(self, preset=None, means=None, K=None, min_gap=0.0, kind=BERNOULLI, sigma=None):
        if sum(x is not None for x in (preset, means, K)) != 1:
            raise ConfigError('exactly one of preset, means or K must be given', key='env')
        if preset is not None and preset not in PRESETS:
            raise ConfigError(f'unknown environment preset {preset!r}', key='env')
        if kind not in REWARD_KINDS:
            raise ConfigError(f'unknown reward kind {kind!r}', key='reward')
        if kind == GAUSSIAN and sigma is None:
            sigma = DEFAULT_SIGMA
        if K is not None and (K < 2 or K * min_gap > 1 or min_gap < 0):
            raise ConfigError(f'infeasible random environment K={K}, min_gap={min_gap}',
                              key='env')
        self.preset = preset
        self.means = None if means is None else [float(m) for m in means]
        self.K_random = K
        self.min_gap = float(min_gap)
        self.kind = kind
        self.sigma = sigma if kind == GAUSSIAN else None

    @classmethod
    def parse(cls, text, arms=None, min_gap=0.0, reward=BERNOULLI):
        """
        Parses an environment string and a reward string

        ### Parameters

        - text (string): 'mu1'..'mu4', 'random', 'random:K', 'random:K:gap' or a comma-separated
          list of means
        - arms (int): K for a bare 'random'
        - min_gap (float): gap for 'random' / 'random:K'
        - reward (string): 'bernoulli', 'gaussian' or 'gaussian:sigma'

        Examples
        --------

            >>> spec = EnvSpec.parse('random:8:0.07', reward='gaussian:0.1')
            >>> spec.K_random, spec.min_gap, spec.kind, spec.sigma
            (8, 0.07, 'gaussian', 0.1)
        """
        kind, sigma = parse_reward(reward)
        text = text.strip()
        if text in PRESETS:
            return cls(preset=text, kind=kind, sigma=sigma)
        if text.startswith('random'):
            parts = text.split(':')
            try:
                K = int(parts[1]) if len(parts) > 1 and parts[1] else arms
                gap = float(parts[2]) if len(parts) > 2 else min_gap
            except ValueError:
                raise ConfigError(f'malformed random environment {text!r}', key='env')
            if K is None:
                raise ConfigError('a random environment needs a number of arms', key='arms')
            return cls(K=K, min_gap=gap, kind=kind, sigma=sigma)
        try:
            means = [float(x) for x in text.split(',')]
        except ValueError:
            raise ConfigError(f'unknown environment {text!r}', key='env')
        return cls(means=means, kind=kind, sigma=sigma)

    @property
    def is_random(self):
        return self.K_random is not None

    @property
    def K(self):
        if self.is_random:
            return self.K_random
        return len(PRESETS[self.preset] if self.preset else self.means)

    @property
    def label(self):
        if self.preset:
            name = self.preset
        elif self.is_random:
            name = f'random:{self.K_random}:{self.min_gap:g}'
        else:
            name = ','.join(f'{m:g}' for m in self.means)
        if self.kind == GAUSSIAN:
            return f'{name}/gaussian:{self.sigma:g}'
        return name

    def build(self, rng):
        """
        Returns the Environment of one experiment (random means are drawn from `rng`)
        """
        if self.is_random:
            return random_instance(self.K_random, self.min_gap, rng, self.kind, self.sigma)
        means = PRESETS[self.preset] if self.preset else self.means
        return Environment.from_means(means, self.kind, self.sigma)

    def to_dict(self):
        return {'env': self.label.split('/')[0], 'reward': self.kind if self.sigma is None
                else f'{self.kind}:{self.sigma:g}'}


def parse_reward(text):
    """
    Parses 'bernoulli', 'gaussian' or 'gaussian:sigma' into (kind, sigma)
    """
    kind, _, sigma = text.strip().partition(':')
    if kind not in REWARD_KINDS:
        raise ConfigError(f'unknown reward kind {text!r}', key='reward')
    if not sigma:
        return kind, (DEFAULT_SIGMA if kind == GAUSSIAN else None)
    if kind != GAUSSIAN:
        raise ConfigError('only Gaussian rewards take a sigma', key='reward')
    try:
        return kind, float(sigma)
    except ValueError:
        raise ConfigError(f'malformed reward sigma {sigma!r}', key='reward')


def min_pairwise_gap(means):
    """
    Returns the smallest |mu_i - mu_j| over all pairs of arms
    """
    return float(np.diff(np.sort(np.asarray(means, dtype=np.float64))).min())

"""
Contains methods for running batches of seeded bandit experiments

Every experiment derives its own random streams from (base_seed, experiment index), so batches
give identical results no matter how many worker processes run them or in which order:

- the environment (random arm means) comes from stream (base_seed, index, ENV_STREAM)
- arm k's rewards come from stream (base_seed, index, REWARD_STREAM, k)
- the policy's own draws come from stream (base_seed, index, POLICY_STREAM, policy_id)

Policies compared on the same base seed therefore see the same environments and, for the same
sequence of pulls, the same rewards.

Examples
--------

    >>> from cpc.bandits.env import EnvSpec
    >>> from cpc.bandits.harness import ExperimentConfig, run_batch
    >>> from cpc.bandits.policies import PolicyConfig
    >>> config = ExperimentConfig(EnvSpec.parse('0.1,0.9'), PolicyConfig('ucb'), N=50,
    ...                           num_experiments=2, base_seed=7)
    >>> summary = run_batch(config)
    >>> summary.num_experiments, summary.N
    (2, 50)
"""

# Built-ins
import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial

# Third-party
import numpy as np
from scipy import stats as sps

# This package
from .datasets import ArmStats, BatchSummary, RegretTrace
from .env import ENV_STREAM, RewardStream, sample_reward
from .exceptions import ConfigError
from .policies import PolicyConfig, PolicyState, memory_bits, policy_step, update_stats
from .rimab import AggregatorConfig, VELCRO_LABEL, rimab_run, velcro_run
from .rng import Prng, derive_seed

logger = logging.getLogger(__name__)

POLICY_STREAM = 2
DEFAULT_SEED = 42


class ExperimentConfig:
    """
    Everything needed to run a batch of experiments

    Exactly one of `policy` and `aggregator` is given. With `velcro=True` the aggregator's
    candidates are run through the velcro-approx baseline instead of RI-MAB.

    ### Parameters

    - env_spec (EnvSpec): how to build each experiment's environment
    - policy (PolicyConfig): single policy to run
    - aggregator (AggregatorConfig): RI-MAB configuration
    - N (int): horizon
    - num_experiments (int): number of experiments
    - base_seed (int): 32-bit base seed
    - workers (int): worker processes (1 runs in the calling process)
    - velcro (bool): run the velcro-approx baseline with the aggregator's candidates
    """
    def __init__(self, env_spec, policy=None, aggregator=None, N=10000, num_experiments=100,
                 base_seed=DEFAULT_SEED, workers=1, velcro=False):
        if (policy is None) == (aggregator is None):
            raise ConfigError('exactly one of a policy and an aggregator must be given',
                              key='policy')
        if N < env_spec.K:
            raise ConfigError(f'horizon {N} is shorter than the number of arms {env_spec.K}',
                              key='horizon')
        if num_experiments < 1:
            raise ConfigError(f'need at least one experiment (got {num_experiments})',
                              key='experiments')
        if workers < 1:
            raise ConfigError(f'need at least one worker (got {workers})', key='workers')
        if aggregator is not None and not velcro:
            aggregator.check_horizon(N)
        self.env_spec = env_spec
        self.policy = policy
        self.aggregator = aggregator
        self.N = int(N)
        self.num_experiments = int(num_experiments)
        self.base_seed = int(base_seed)
        self.workers = int(workers)
        self.velcro = bool(velcro)

    @property
    def label(self):
        if self.policy is not None:
            return self.policy.label
        return VELCRO_LABEL if self.velcro else self.aggregator.label

    @property
    def policy_id(self):
        if self.policy is not None:
            return self.policy.policy_id
        return PolicyConfig.stream_id(self.label)

    def replace(self, **kwargs):
        """
        Returns a copy with some fields replaced
        """
        fields = dict(env_spec=self.env_spec, policy=self.policy, aggregator=self.aggregator,
                      N=self.N, num_experiments=self.num_experiments, base_seed=self.base_seed,
                      workers=self.workers, velcro=self.velcro)
        fields.update(kwargs)
        return ExperimentConfig(**fields)

    def to_dict(self):
        config = {'label': self.label, 'horizon': self.N, 'experiments': self.num_experiments,
                  'seed': self.base_seed}
        config.update(self.env_spec.to_dict())
        if self.policy is not None:
            config['policy'] = self.policy.to_dict()
        else:
            config['aggregator'] = self.aggregator.to_dict()
        return config


def run_policy(policy, env, N, rng, rewards=None, label=None, index=0):
    """
    Runs a single policy for N slots

    ### Parameters

    - policy (PolicyConfig): the policy
    - env (Environment): the environment
    - N (int): horizon
    - rng (Prng): the policy's random number generator
    - rewards (callable, optional): arm -> reward; defaults to sampling `env` with `rng`
    - label (string, optional): trace label (default `policy.label`)
    - index (int): experiment index recorded in the trace

    ### Returns

    - RegretTrace
    """
    stats = ArmStats(env.K)
    state = PolicyState(policy, env.K)
    fmt = policy.fixed_format
    gaps = env.gaps
    regret = np.empty(N)
    pulls = np.zeros(env.K, dtype=np.int64)
    total = cumulative = 0.0
    for n in range(1, N + 1):
        arm, state = policy_step(policy, stats, state, n, rng)
        reward = rewards(arm) if rewards is not None else sample_reward(env, arm, rng)
        update_stats(stats, arm, reward, fmt)
        pulls[arm] += 1
        total += reward
        cumulative += gaps[arm]
        regret[n - 1] = cumulative
    return RegretTrace(regret, pulls, env, total, draws=state.draws,
                       comparisons=state.comparisons, label=label or policy.label, index=index,
                       memory_bits=memory_bits(policy.kind, env.K, N, policy.L))


def run_experiment(config, index):
    """
    Runs experiment `index` of a batch

    ### Parameters

    - config (ExperimentConfig): the batch configuration
    - index (int): experiment index

    ### Returns

    - RegretTrace
    """
    base = config.base_seed
    env = config.env_spec.build(Prng(derive_seed(base, index, ENV_STREAM)))
    rewards = RewardStream(env, base, index)
    rng = Prng(derive_seed(base, index, POLICY_STREAM, config.policy_id))
    logger.debug('Experiment %d of %s on %s', index, config.label, env)
    if config.policy is not None:
        return run_policy(config.policy, env, config.N, rng, rewards, index=index)
    if config.velcro:
        return velcro_run(config.aggregator, env, config.N, rng, rewards, index=index)
    return rimab_run(config.aggregator, env, config.N, rng, rewards, index=index)


def boxplot_stats(values, whis=1.5):
    """
    Box-plot statistics of a sample

    Quartiles use linear interpolation between order statistics. Whiskers reach the most extreme
    values within `whis` times the inter-quartile range of the box; everything beyond is an outlier.

    ### Parameters

    - values (array_like): the sample (non-empty)
    - whis (float): whisker reach in units of the inter-quartile range

    ### Returns

    - dict with keys q1, median, q3, iqr, whisker_low, whisker_high, outliers, mean

    Examples
    --------

        >>> boxplot_stats(range(1, 101))['median']
        50.5
        >>> boxplot_stats([1, 2, 3, 4, 5, 6, 7, 8, 9, 1000])['outliers']
        [1000.0]
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError('cannot compute box-plot statistics of an empty sample')
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    low_limit, high_limit = q1 - whis * iqr, q3 + whis * iqr
    inside = values[(values >= low_limit) & (values <= high_limit)]
    outliers = values[(values < low_limit) | (values > high_limit)]
    return {
        'q1': float(q1),
        'median': float(median),
        'q3': float(q3),
        'iqr': float(iqr),
        'whisker_low': float(inside.min()),
        'whisker_high': float(inside.max()),
        'outliers': sorted(float(x) for x in outliers),
        'mean': float(values.mean()),
    }


def mean_ci(values, confidence=0.95):
    """
    Student-t confidence interval of the mean of a sample

    Returns (mean, mean) for a single value or a constant sample.
    """
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    if values.size < 2:
        return mean, mean
    sem = sps.sem(values)
    if sem == 0:
        return mean, mean
    low, high = sps.t.interval(confidence, values.size - 1, loc=mean, scale=sem)
    return float(low), float(high)


def summarize(label, traces):
    """
    Builds the BatchSummary of a list of traces (in experiment-index order)
    """
    finals = [trace.final_regret for trace in traces]
    return BatchSummary(label, traces, boxplot_stats(finals), mean_ci(finals))


def run_batch(config):
    """
    Runs every experiment of a batch and summarizes them

    With `config.workers > 1` the experiments run in a process pool; the traces are always
    reduced in experiment-index order.

    ### Parameters

    - config (ExperimentConfig): the batch

    ### Returns

    - BatchSummary
    """
    logger.info('Running %d experiments of %s on %s (N=%d, seed=%d)', config.num_experiments,
                config.label, config.env_spec.label, config.N, config.base_seed)
    indices = range(config.num_experiments)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            traces = list(executor.map(partial(run_experiment, config), indices))
    else:
        traces = [run_experiment(config, index) for index in indices]
    summary = summarize(config.label, traces)
    logger.info('%s: mean final regret %.2f, 95%% CI [%.2f, %.2f]', config.label,
                summary.final_regrets.mean(), *summary.ci95)
    return summary


def compare(env_spec, policies, N, num_experiments, base_seed=DEFAULT_SEED, workers=1):
    """
    Runs several policies on paired experiments (same environments and reward streams)

    ### Parameters

    - env_spec (EnvSpec): environment description
    - policies (list of PolicyConfig or AggregatorConfig): what to compare
    - N, num_experiments, base_seed, workers: as in ExperimentConfig

    ### Returns

    - list of BatchSummary, one per entry of `policies`
    """
    summaries = []
    for policy in policies:
        if isinstance(policy, AggregatorConfig):
            config = ExperimentConfig(env_spec, aggregator=policy, N=N,
                                      num_experiments=num_experiments, base_seed=base_seed,
                                      workers=workers)
        else:
            config = ExperimentConfig(env_spec, policy, N=N, num_experiments=num_experiments,
                                      base_seed=base_seed, workers=workers)
        summaries.append(run_batch(config))
    return summaries


def sweep_precision(env_spec, policy, precisions, N, num_experiments, base_seed=DEFAULT_SEED,
                    workers=1):
    """
    Runs one policy at several QF precisions on paired experiments

    ### Returns

    - list of BatchSummary, one per precision
    """
    return compare(env_spec, [policy.with_precision(p) for p in precisions], N, num_experiments,
                   base_seed, workers)

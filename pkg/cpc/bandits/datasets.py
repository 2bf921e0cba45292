"""
Defines the data containers shared by policies, RI-MAB and the harness

- ArmStats: cumulative reward X and pull count T of every arm
- BinTable: the L x K matrix of binned uniform-sample counts used by SBTS-ES/ESSR
- RegretTrace: everything recorded about one experiment
- BatchSummary: statistics over a batch of experiments
"""

# Third-party
import numpy as np
import xarray as xr

# This package
from .exceptions import ConsistencyError


class ArmStats:
    """
    Per-arm cumulative reward X and pull count T

    Both start at 1 for every arm (a uniform prior), so T >= 1 and X <= T always hold.

    ### Parameters

    - K (int): number of arms
    - X (array_like, optional): initial cumulative rewards (default all ones)
    - T (array_like, optional): initial pull counts (default all ones)
    """
    def __init__(self, K, X=None, T=None):
        self.X = np.ones(K, dtype=np.float64) if X is None else np.array(X, dtype=np.float64)
        self.T = np.ones(K, dtype=np.int64) if T is None else np.array(T, dtype=np.int64)
        if self.X.shape != (K,) or self.T.shape != (K,):
            raise ValueError(f'X and T must both have length K={K}')
        if (self.T < 1).any():
            raise ValueError('pull counts T must be at least 1')

    @property
    def K(self):
        return len(self.T)

    @property
    def means(self):
        return self.X / self.T

    def __repr__(self):
        return f'ArmStats(X={self.X.tolist()}, T={self.T.tolist()})'


class BinTable:
    """
    Bin table of SBTS-ES/ESSR: beta[l, k] counts the uniform samples of arm k in bin l

    Rows are bins (row 0 holds [0, 1/L), row L-1 holds [(L-1)/L, 1)), columns are arms. A new
    table is empty; under the SBTS-ESSR maintenance discipline column k holds exactly T[k]
    samples.

    ### Parameters

    - L (int): number of bins
    - K (int): number of arms
    """
    def __init__(self, L, K):
        if L < 1:
            raise ValueError(f'number of bins must be positive (got {L})')
        self.beta = np.zeros((L, K), dtype=np.int64)

    @property
    def L(self):
        return self.beta.shape[0]

    @property
    def K(self):
        return self.beta.shape[1]

    def clear(self):
        self.beta[:] = 0

    def column_sums(self):
        return self.beta.sum(axis=0)

    def targets(self, T):
        """
        Returns the column sums the invariant requires for pull counts T (one sample per pull)
        """
        return np.asarray(T, dtype=np.int64)

    def check(self, T):
        """
        Raises ConsistencyError if a column sum differs from T[k] or an entry is negative
        """
        if (self.beta < 0).any():
            arm = int(np.nonzero((self.beta < 0).any(axis=0))[0][0])
            raise ConsistencyError('negative bin count', arm=arm)
        bad = np.nonzero(self.column_sums() != self.targets(T))[0]
        if bad.size:
            arm = int(bad[0])
            raise ConsistencyError(
                f'bin table column {arm} sums to {self.column_sums()[arm]}, expected '
                f'{self.targets(T)[arm]}', arm=arm)


class RegretTrace:
    """
    Record of one experiment

    ### Parameters

    - regret (array): cumulative pseudo-regret after each slot (length N)
    - pulls (array): number of times each arm was played (sums to N)
    - env (Environment): the environment the experiment ran in
    - total_reward (float): reward actually collected
    - draws (array): uniform draws consumed by the policy in each slot
    - comparisons (array): comparisons made by the policy in each slot
    - label (string): name of the policy/aggregator
    - index (int): experiment index within its batch
    - committed (int): committed candidate (RI-MAB only)
    - active (array): active candidate in each slot (RI-MAB / velcro only)
    - beliefs (array): belief after each learning slot, shape (N_learn, A) (RI-MAB / velcro only)
    - memory_bits (int): storage the policy (or all resident candidates) needs for its state
    """
    def __init__(self, regret, pulls, env, total_reward, draws=None, comparisons=None,
                 label=None, index=0, committed=None, active=None, beliefs=None,
                 memory_bits=None):
        self.regret = np.asarray(regret, dtype=np.float64)
        self.pulls = np.asarray(pulls, dtype=np.int64)
        self.env = env
        self.total_reward = float(total_reward)
        self.draws = None if draws is None else np.asarray(draws, dtype=np.int64)
        self.comparisons = None if comparisons is None else np.asarray(comparisons, dtype=np.int64)
        self.label = label
        self.index = index
        self.committed = committed
        self.active = None if active is None else np.asarray(active, dtype=np.int64)
        self.beliefs = None if beliefs is None else np.asarray(beliefs, dtype=np.float64)
        self.memory_bits = memory_bits

    @property
    def N(self):
        return len(self.regret)

    @property
    def final_regret(self):
        return float(self.regret[-1])

    @property
    def optimal_pulls(self):
        return int(self.pulls[self.env.optimal_arm])

    @property
    def realized_regret(self):
        return self.N * self.env.optimal_mean - self.total_reward


class BatchSummary:
    """
    Statistics over the experiments of one batch

    ### Parameters

    - label (string): policy/aggregator name
    - traces (list of RegretTrace): the experiments, in index order
    - boxplot (dict): output of `harness.boxplot_stats()` for the final regrets
    - ci95 (tuple): 95% confidence interval of the mean final regret
    """
    def __init__(self, label, traces, boxplot, ci95):
        self.label = label
        self.traces = traces
        regrets = np.vstack([trace.regret for trace in traces])
        self.mean_regret = regrets.mean(axis=0)
        self.std_regret = regrets.std(axis=0)
        self.final_regrets = regrets[:, -1].copy()
        self.boxplot = boxplot
        self.ci95 = ci95

    @property
    def N(self):
        return len(self.mean_regret)

    @property
    def num_experiments(self):
        return len(self.traces)

    @property
    def optimal_pulls(self):
        return np.array([trace.optimal_pulls for trace in self.traces])

    @property
    def committed(self):
        return [trace.committed for trace in self.traces]

    def to_xarray(self):
        """
        Returns the per-slot mean and standard deviation of the regret as an xarray Dataset
        """
        slots = np.arange(1, self.N + 1)
        return xr.Dataset(
            {
                'mean_regret': ('slot', self.mean_regret),
                'std_regret': ('slot', self.std_regret),
            },
            coords={'slot': slots},
            attrs={'label': self.label, 'num_experiments': self.num_experiments},
        )

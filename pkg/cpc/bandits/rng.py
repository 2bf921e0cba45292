"""
Contains a seedable 32-bit Mersenne Twister (MT19937) with draw counters

Every random number used by the policies and environments comes from a `Prng`, so a fixed seed
reproduces a whole experiment bit for bit. The generator keeps two counters:

- `draws`: number of accepted 32-bit words handed out (uniforms, integers, normals)
- `retries`: words thrown away by rejection sampling, and removal indices redrawn by SBTS-ESSR

Examples
--------

    >>> from cpc.bandits.rng import Prng
    >>> rng = Prng(5489)
    >>> rng.next_u32()
    3499211612
    >>> rng.draws
    1
"""

# Built-ins
import math

# Third-party
import numpy as np

# Period parameters
N = 624
M = 397
MATRIX_A = np.uint32(0x9908B0DF)
UPPER_MASK = np.uint32(0x80000000)
LOWER_MASK = np.uint32(0x7FFFFFFF)
TEMPERING_MASK_B = np.uint32(0x9D2C5680)
TEMPERING_MASK_C = np.uint32(0xEFC60000)

MASK_32 = 0xFFFFFFFF
MASK_64 = 0xFFFFFFFFFFFFFFFF
TWO_32 = 4294967296.0

DEFAULT_SEED = 5489


def _twist_block(mt):
    """
    Regenerates all 624 words of the state in place

    The recurrence for word `kk` reads word `kk + M` (or `kk + M - N` after wrapping), which has
    already been regenerated for `kk >= N - M`. The update is therefore split into blocks no
    longer than `N - M` so every block only reads words finished by a previous block.
    """
    def _mix(upper, lower):
        y = (upper & UPPER_MASK) | (lower & LOWER_MASK)
        return (y >> np.uint32(1)) ^ ((y & np.uint32(1)) * MATRIX_A)

    # kk = 0 .. 226 reads the untouched words 397 .. 623
    mt[:N - M] = mt[M:] ^ _mix(mt[:N - M], mt[1:N - M + 1])
    # kk = 227 .. 453 reads words 0 .. 226 (updated above)
    mt[N - M:2 * (N - M)] = mt[:N - M] ^ _mix(mt[N - M:2 * (N - M)], mt[N - M + 1:2 * (N - M) + 1])
    # kk = 454 .. 622 reads words 227 .. 395 (updated above)
    mt[2 * (N - M):N - 1] = mt[N - M:M - 1] ^ _mix(mt[2 * (N - M):N - 1], mt[2 * (N - M) + 1:N])
    # kk = 623 wraps around to word 0
    mt[N - 1] = mt[M - 1] ^ _mix(mt[N - 1:N], mt[0:1])[0]


def _temper(y):
    y = y ^ (y >> np.uint32(11))
    y = y ^ ((y << np.uint32(7)) & TEMPERING_MASK_B)
    y = y ^ ((y << np.uint32(15)) & TEMPERING_MASK_C)
    return y ^ (y >> np.uint32(18))


class Prng:
    """
    MT19937 pseudo-random number generator

    A `Prng` is mutable single-owner state. Do not share one between threads or processes; derive
    a separate seed for each consumer with `derive_seed()` instead.

    ### Parameters

    - seed (int): 32-bit seed, initialised with the standard MT19937 seeding recurrence
    """
    def __init__(self, seed=DEFAULT_SEED):
        self.state = np.zeros(N, dtype=np.uint32)
        self.index = N
        self.draws = 0
        self.retries = 0
        self._output = np.zeros(N, dtype=np.uint32)
        self.seed(seed)

    def seed(self, s):
        """
        Re-initialises the state from a 32-bit seed and resets the counters

        ### Parameters

        - s (int): seed (only the low 32 bits are used)
        """
        mt = [0] * N
        mt[0] = int(s) & MASK_32
        for i in range(1, N):
            mt[i] = (1812433253 * (mt[i - 1] ^ (mt[i - 1] >> 30)) + i) & MASK_32
        self.state[:] = mt
        self.index = N
        self.draws = 0
        self.retries = 0

    def _refill(self):
        _twist_block(self.state)
        self._output = _temper(self.state.copy())
        self.index = 0

    def next_u32(self):
        """
        Returns the next 32-bit word of the stream

        ### Returns

        - int: value in [0, 2^32)
        """
        if self.index >= N:
            self._refill()
        value = int(self._output[self.index])
        self.index += 1
        self.draws += 1
        return value

    def u32_array(self, count):
        """
        Returns the next `count` 32-bit words as an array

        The words are exactly those `count` calls to `next_u32()` would return.

        ### Parameters

        - count (int): number of words to draw

        ### Returns

        - array of uint32 with length `count`
        """
        out = np.empty(count, dtype=np.uint32)
        filled = 0
        while filled < count:
            if self.index >= N:
                self._refill()
            take = min(count - filled, N - self.index)
            out[filled:filled + take] = self._output[self.index:self.index + take]
            self.index += take
            filled += take
        self.draws += count
        return out

    def next_unit(self):
        """
        Returns a uniform real in [0, 1): the next word divided by 2^32
        """
        return self.next_u32() / TWO_32

    def uniforms(self, count):
        """
        Returns `count` uniform reals in [0, 1), consuming the same words as `count` calls to
        `next_unit()`
        """
        return self.u32_array(count).astype(np.float64) / TWO_32

    def next_int(self, lo, hi):
        """
        Returns an integer uniformly distributed over {lo, ..., hi}

        Uses rejection on the 32-bit word so the result is unbiased. Rejected words are counted in
        `retries`, the accepted one in `draws`.

        ### Parameters

        - lo (int): smallest value
        - hi (int): largest value

        ### Raises

        - ValueError: if lo > hi
        """
        if lo > hi:
            raise ValueError(f'next_int requires lo <= hi (got lo={lo}, hi={hi})')
        span = hi - lo + 1
        if span > MASK_32 + 1:
            raise ValueError('next_int range must fit in 32 bits')
        limit = ((MASK_32 + 1) // span) * span
        while True:
            word = self.next_u32()
            if word < limit:
                return lo + word % span
            self.mark_retry()

    def next_normal(self):
        """
        Returns a standard normal variate (Box-Muller, two unit draws per value)
        """
        u1 = 1.0 - self.next_unit()
        u2 = self.next_unit()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def mark_retry(self):
        """
        Moves the most recent draw from the `draws` counter to the `retries` counter
        """
        self.draws -= 1
        self.retries += 1


def seed(s):
    """
    Returns a new `Prng` seeded with `s`

    ### Parameters

    - s (int): 32-bit seed

    ### Returns

    - Prng
    """
    return Prng(s)


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK_64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK_64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK_64
    return x ^ (x >> 31)


def derive_seed(base_seed, *keys):
    """
    Derives a 32-bit seed from a base seed and any number of integer keys

    The result depends only on the arguments, never on the order experiments are executed in.

    ### Parameters

    - base_seed (int): the run's base seed
    - keys (ints): e.g. experiment index, stream id, arm index

    ### Returns

    - int: seed in [0, 2^32)

    Examples
    --------

        >>> derive_seed(42, 0) == derive_seed(42, 0)
        True
        >>> derive_seed(42, 0) == derive_seed(42, 1)
        False
    """
    h = _splitmix64(int(base_seed) & MASK_64)
    for key in keys:
        h = _splitmix64(h ^ (int(key) & MASK_64))
    return h & MASK_32

"""
Contains methods for emulating reduced-precision quality factors

Quality factors (QFs) are computed in double precision and then rounded to the precision the
hardware would hold them in: single-precision float, or a fixed-point format with a given word
length (WL) and number of fraction bits (F). Fixed-point rounding is round-half-to-even followed by
saturation to the representable range.

Examples
--------

    >>> from cpc.bandits.numeric import FixedFormat, quantize
    >>> quantize(0.35, FixedFormat(11, 8))
    0.3515625
    >>> quantize(10, FixedFormat(6, 5))
    1.96875
"""

# Third-party
import numpy as np

# This package
from .exceptions import ConfigError

F64 = 'f64'
F32 = 'f32'
FIXED = 'fixed'

# Integer bits reserved when the fraction bits are not given explicitly. TS-family and KL-UCB
# QFs lie in [0, 1]; UCB QFs reach 1 + sqrt(alpha * ln N), about 5.3 for N=10^4 and alpha=2.
DEFAULT_INT_BITS = {'unit': 1, 'ucb': 4}


class FixedFormat:
    """
    A fixed-point number format

    ### Parameters

    - total_bits (int): word length (WL)
    - frac_bits (int): number of fraction bits (F), 1 <= F <= WL - (1 if signed else 0)
    - signed (bool): two's complement when True, unsigned otherwise (default)
    """
    def __init__(self, total_bits, frac_bits, signed=False):
        if not 1 <= frac_bits <= total_bits - (1 if signed else 0):
            raise ValueError(f'invalid fixed-point format WL={total_bits}, F={frac_bits}, '
                             f'signed={signed}')
        self.total_bits = int(total_bits)
        self.frac_bits = int(frac_bits)
        self.signed = bool(signed)

    @property
    def scale(self):
        return float(2 ** self.frac_bits)

    @property
    def min_code(self):
        return -(2 ** (self.total_bits - 1)) if self.signed else 0

    @property
    def max_code(self):
        return 2 ** (self.total_bits - 1) - 1 if self.signed else 2 ** self.total_bits - 1

    @property
    def min_value(self):
        return self.min_code / self.scale

    @property
    def max_value(self):
        return self.max_code / self.scale

    @property
    def resolution(self):
        return 1.0 / self.scale

    def __eq__(self, other):
        return (isinstance(other, FixedFormat) and
                (self.total_bits, self.frac_bits, self.signed) ==
                (other.total_bits, other.frac_bits, other.signed))

    def __hash__(self):
        return hash((self.total_bits, self.frac_bits, self.signed))

    def __repr__(self):
        sign = ':signed' if self.signed else ''
        return f'fixed:{self.total_bits}:{self.frac_bits}{sign}'


def quantize(x, fmt):
    """
    Rounds x to the nearest value representable in `fmt`, saturating out-of-range values

    ### Parameters

    - x (float or array_like): value(s) to quantize; +/-inf saturate
    - fmt (FixedFormat): target format

    ### Returns

    - float (or array of floats): the dequantized value(s)

    ### Raises

    - ValueError: if any input is NaN
    """
    values = np.asarray(x, dtype=np.float64)
    if np.isnan(values).any():
        raise ValueError('cannot quantize NaN')
    codes = np.clip(np.rint(values * fmt.scale), fmt.min_code, fmt.max_code)
    result = codes / fmt.scale
    if np.ndim(x) == 0:
        return float(result)
    return result


def quantize_accumulator(x, fmt):
    """
    Rounds a running sum to the fraction bits of `fmt` without saturating its integer part

    Cumulative rewards grow up to the horizon N, so they are kept in a register with enough
    integer bits; only their fractional resolution follows the QF format.
    """
    return float(np.rint(x * fmt.scale) / fmt.scale)


class Precision:
    """
    Precision a policy's quality factors are held in

    ### Parameters

    - mode (string): 'f64', 'f32' or 'fixed'
    - total_bits (int): word length (fixed only)
    - frac_bits (int): fraction bits (fixed only); None picks a default per policy family
    """
    def __init__(self, mode=F64, total_bits=None, frac_bits=None):
        if mode not in (F64, F32, FIXED):
            raise ConfigError(f'unknown precision mode {mode!r}', key='precision')
        if mode == FIXED:
            if total_bits is None:
                raise ConfigError('fixed precision needs a word length', key='precision')
            # Validate eagerly with the widest default the format could end up with
            FixedFormat(total_bits, frac_bits if frac_bits is not None else
                        max(1, total_bits - max(DEFAULT_INT_BITS.values())))
        self.mode = mode
        self.total_bits = total_bits
        self.frac_bits = frac_bits

    @classmethod
    def parse(cls, text):
        """
        Parses 'f64', 'f32', 'fixed:WL' or 'fixed:WL:F'

        Examples
        --------

            >>> Precision.parse('fixed:11:10').format_for('unit')
            fixed:11:10
            >>> Precision.parse('fixed:11').format_for('ucb')
            fixed:11:7
        """
        text = text.strip().lower()
        if text in (F64, 'double', 'float64'):
            return cls(F64)
        if text in (F32, 'single', 'float32', 'sp-fp'):
            return cls(F32)
        parts = text.split(':')
        if parts[0] != FIXED or len(parts) not in (2, 3):
            raise ConfigError(f'malformed precision {text!r}', key='precision')
        try:
            bits = [int(p) for p in parts[1:]]
        except ValueError:
            raise ConfigError(f'malformed precision {text!r}', key='precision')
        try:
            return cls(FIXED, *bits)
        except ValueError as e:
            raise ConfigError(str(e), key='precision')

    def format_for(self, family):
        """
        Returns the FixedFormat used for a QF family ('unit' or 'ucb'), None if not fixed
        """
        if self.mode != FIXED:
            return None
        frac_bits = self.frac_bits
        if frac_bits is None:
            frac_bits = max(1, self.total_bits - DEFAULT_INT_BITS[family])
        return FixedFormat(self.total_bits, frac_bits)

    @property
    def label(self):
        if self.mode != FIXED:
            return self.mode
        if self.frac_bits is None:
            return f'fixed:{self.total_bits}'
        return f'fixed:{self.total_bits}:{self.frac_bits}'

    def __eq__(self, other):
        return isinstance(other, Precision) and self.label == other.label

    def __hash__(self):
        return hash(self.label)

    def __repr__(self):
        return f'Precision({self.label!r})'


def parse_precision_list(text):
    """
    Parses a comma-separated list of precisions, e.g. 'f32,fixed:27:26,fixed:11:10'
    """
    return [Precision.parse(item) for item in text.split(',') if item.strip()]


def quantize_vector(q, precision, family='unit'):
    """
    Rounds a QF vector to the given precision

    ### Parameters

    - q (array_like): quality factors
    - precision (Precision): f64 is the identity, f32 rounds to single precision, fixed applies
      `quantize` elementwise
    - family (string): 'unit' (QFs in [0, 1]) or 'ucb', picks the default fraction bits of a
      fixed format

    ### Returns

    - array of float64
    """
    q = np.asarray(q, dtype=np.float64)
    if precision is None or precision.mode == F64:
        return q
    if precision.mode == F32:
        return q.astype(np.float32).astype(np.float64)
    return quantize(q, precision.format_for(family))

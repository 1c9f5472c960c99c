"""
Extended-precision scalar layer for the fBm Legendre expansion toolkit.
This file defines the precision context every Real is created under, lossless
parsing of user decimals, and the Gamma function (Spouge's approximation with
the reflection formula), which is the only special function the kernel needs.
"""
import logging
import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Tuple, Union

from mpmath import mpf
from mpmath.ctx_mp import MPContext

from app.exceptions import ConfigurationError, ParseError, PoleError

# Set up logging
logger = logging.getLogger(__name__)

# Extended-precision value bound to the context it was created under
Real = mpf

MIN_BITS = 64
ROUNDING = "nearest-even"

_DECIMAL_RE = re.compile(r"^-?(\d+(\.\d*)?|\.\d+)$")
_RATIONAL_RE = re.compile(r"^-?\d+/\d+$")


class PrecisionContext:
    """
    Working precision (binary digits of the significand) for extended-precision
    scalars. Contexts are immutable once built: the underlying mpmath context is
    private and its precision is never changed after construction.
    """

    __slots__ = ("_bits", "_mp")

    def __init__(self, bits: int):
        if isinstance(bits, bool) or not isinstance(bits, int):
            raise ConfigurationError(f"Precision must be an integer number of bits, got {bits!r}")
        if bits < MIN_BITS:
            raise ConfigurationError(f"Precision must be at least {MIN_BITS} bits, got {bits}")
        mp = MPContext()
        mp.prec = bits
        self._bits = bits
        self._mp = mp

    @property
    def bits(self) -> int:
        return self._bits

    @property
    def rounding(self) -> str:
        return ROUNDING

    @property
    def mp(self) -> MPContext:
        """The mpmath context whose mpf type carries this precision."""
        return self._mp

    @property
    def decimal_digits(self) -> int:
        """Significant decimal digits that re-parse to the same binary value."""
        return math.ceil(self._bits * math.log10(2)) + 1

    def real(self, value: Union[int, Fraction, str, Real]) -> Real:
        """
        Convert a value into a Real at this context's precision.

        Args:
            value: int, Fraction, exact decimal/rational string, or a Real
                (possibly from another context, re-rounded here)

        Returns:
            Real rounded to nearest at `bits` precision
        """
        mp = self._mp
        if isinstance(value, str):
            value = parse_exact(value)
        if isinstance(value, Fraction):
            if value.denominator == 1:
                return mp.mpf(value.numerator)
            return mp.mpf(value.numerator) / value.denominator
        if isinstance(value, bool):
            raise ParseError("Booleans are not numbers here")
        return mp.mpf(value)

    def zero(self) -> Real:
        return self._mp.mpf(0)

    def one(self) -> Real:
        return self._mp.mpf(1)

    def guarded(self, extra_bits: int) -> "PrecisionContext":
        """A separate, higher-precision context for internal working precision."""
        return make_context(self._bits + max(int(extra_bits), 0))

    def ulp(self, x: Real) -> Real:
        """Unit in the last place of |x| at this precision (2^-bits for x = 0)."""
        mp = self._mp
        if x == 0:
            return mp.ldexp(mp.mpf(1), -self._bits)
        return mp.ldexp(mp.mpf(1), int(mp.mag(x)) - self._bits)

    def to_decimal_string(self, x: Real) -> str:
        """Decimal string with enough digits to re-parse to the same value."""
        return self._mp.nstr(self._mp.mpf(x), self.decimal_digits, strip_zeros=True)

    def from_decimal_string(self, text: str) -> Real:
        """Parse a stored decimal (scientific notation allowed) at this precision."""
        try:
            return self._mp.mpf(text.strip())
        except (ValueError, TypeError) as e:
            raise ParseError(f"Not a decimal number: {text!r}") from e

    def __eq__(self, other) -> bool:
        return isinstance(other, PrecisionContext) and other._bits == self._bits

    def __hash__(self) -> int:
        return hash(("PrecisionContext", self._bits))

    def __repr__(self) -> str:
        return f"PrecisionContext(bits={self._bits}, rounding={ROUNDING!r})"


@lru_cache(maxsize=None)
def make_context(bits: int) -> PrecisionContext:
    """
    Create (or reuse) the precision context for `bits` binary digits.

    Raises:
        ConfigurationError: bits < 64
    """
    return PrecisionContext(bits)


def context_of(x: Real) -> PrecisionContext:
    """The precision context a Real was created under."""
    return make_context(int(x.context.prec))


def parse_exact(text: str) -> Fraction:
    """
    Parse a user-supplied number losslessly.

    Accepts plain decimals ("0.7", "2", ".25") and exact rationals ("1/3").
    Scientific notation, infinities and NaN are rejected so that no binary
    rounding can sneak in before the value reaches a precision context.

    Raises:
        ParseError: the text is not an exact decimal or rational
    """
    if not isinstance(text, str):
        raise ParseError(f"Expected a decimal string, got {type(text).__name__}")
    s = text.strip()
    if _DECIMAL_RE.match(s) or _RATIONAL_RE.match(s):
        try:
            return Fraction(s)
        except ZeroDivisionError as e:
            raise ParseError(f"Zero denominator in {text!r}") from e
    raise ParseError(f"Not an exact decimal (scientific notation is not accepted): {text!r}")


def format_exact(value: Fraction) -> str:
    """Canonical text of an exact value: a terminating decimal when possible."""
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    places = max(twos, fives)
    scaled = abs(value.numerator) * 10 ** places // value.denominator
    digits = str(scaled).rjust(places + 1, "0")
    text = f"{digits[:-places]}.{digits[-places:]}".rstrip("0").rstrip(".")
    return f"-{text}" if value < 0 else text


@lru_cache(maxsize=None)
def _spouge_setup(bits: int) -> Tuple[int, PrecisionContext, Tuple[Real, ...]]:
    """Spouge parameter, working context and coefficients c_0..c_{a-1} for `bits`."""
    a = math.ceil(1.26 * bits * math.log(2) / math.log(2 * math.pi))
    # The coefficient sum cancels roughly a*log2(e) bits
    work = make_context(bits + 2 * a + 32)
    mp = work.mp
    coeffs = [mp.sqrt(2 * mp.pi)]
    factorial = mp.mpf(1)
    half = mp.mpf(1) / 2
    for k in range(1, a):
        if k > 1:
            factorial *= k - 1
        c = mp.power(mp.mpf(a - k), k - half) * mp.exp(mp.mpf(a - k)) / factorial
        coeffs.append(c if k % 2 == 1 else -c)
    logger.debug(f"Spouge setup for {bits} bits: a={a}, working precision {work.bits} bits")
    return a, work, tuple(coeffs)


def _spouge(x: Real, a: int, work: PrecisionContext, coeffs: Tuple[Real, ...]) -> Real:
    """Gamma(x) for x >= 1/2 at the working precision."""
    mp = work.mp
    z = x - 1
    terms = [coeffs[0]]
    for k in range(1, a):
        terms.append(coeffs[k] / (z + k))
    s = mp.fsum(terms)
    za = z + a
    return mp.power(za, z + mp.mpf(1) / 2) * mp.exp(-za) * s


def gamma(x: Real) -> Real:
    """
    Gamma function at the precision of x.

    Spouge's approximation with a ≈ 1.26·bits·ln2/ln(2π) evaluated in a
    guarded context; the reflection formula handles x < 1/2.

    Raises:
        PoleError: x is a non-positive integer
    """
    mp = x.context
    if mp.isint(x) and x <= 0:
        raise PoleError(f"Gamma has a pole at {mp.nstr(x, 10)}")
    a, work, coeffs = _spouge_setup(int(mp.prec))
    w = work.mp
    xw = w.mpf(x)
    if xw < w.mpf(1) / 2:
        value = w.pi / (w.sinpi(xw) * _spouge(1 - xw, a, work, coeffs))
    else:
        value = _spouge(xw, a, work, coeffs)
    return mp.mpf(value)


def rising_factorial(x: Real, k: int) -> Real:
    """x (x+1) ... (x+k-1); 1 for k = 0."""
    result = x.context.mpf(1)
    for m in range(k):
        result *= x + m
    return result


def falling_factorial(x: Real, k: int) -> Real:
    """x (x-1) ... (x-k+1); 1 for k = 0."""
    result = x.context.mpf(1)
    for m in range(k):
        result *= x - m
    return result

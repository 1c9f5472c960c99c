"""
Legendre coefficients F_i^alpha = ∫_0^T t^alpha P̂(i, t) dt of power functions.
This file provides the closed factorial-ratio construction, the index and degree
recurrences, and the Parseval and tail-decay diagnostics built on them.
"""
import logging
from dataclasses import dataclass
from typing import Iterator, List, Tuple

from app.exceptions import DegenerateInputError, DomainError
from app.utils.numeric import Real, rising_factorial

# Set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PowerCoeffVector:
    """Coefficients F_0..F_{L-1} of t^alpha on [0, T]."""

    alpha: Real
    horizon: Real
    values: Tuple[Real, ...]

    @property
    def order(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> Real:
        return self.values[i]

    def __iter__(self) -> Iterator[Real]:
        return iter(self.values)


def _check_alpha(alpha: Real) -> None:
    if alpha <= alpha.context.mpf(-1) / 2:
        raise DomainError(f"t^alpha is not square integrable for alpha = {alpha} <= -1/2")


def _cutoff(alpha: Real) -> int:
    """Last index with a non-zero coefficient for non-negative integer alpha, else -1."""
    mp = alpha.context
    if mp.isint(alpha) and alpha >= 0:
        return int(alpha)
    return -1


def _leading(alpha: Real, T: Real) -> Real:
    mp = alpha.context
    return mp.power(T, alpha) * mp.sqrt(T)


def power_coeffs_explicit(alpha: Real, L: int, T: Real) -> PowerCoeffVector:
    """
    F_i = T^alpha sqrt(T) sqrt(2i+1) falling(alpha, i) / rising(alpha+1, i+1).

    Numerator and denominator are accumulated as separate running products over
    i; no alternating sum is ever formed. For a non-negative integer alpha the
    entries beyond i = alpha are exact zeros.

    Raises:
        DomainError: alpha <= -1/2 or L < 1
    """
    _check_alpha(alpha)
    if L < 1:
        raise DomainError(f"Order must be at least 1, got {L}")
    mp = alpha.context
    T = mp.mpf(T)
    lead = _leading(alpha, T)
    cutoff = _cutoff(alpha)
    falling = mp.mpf(1)
    rising = alpha + 1
    values: List[Real] = []
    for i in range(L):
        if cutoff >= 0 and i > cutoff:
            values.append(mp.mpf(0))
            continue
        if i > 0:
            falling *= alpha - (i - 1)
            rising *= alpha + i + 1
        values.append(lead * mp.sqrt(mp.mpf(2 * i + 1)) * falling / rising)
    return PowerCoeffVector(alpha=alpha, horizon=T, values=tuple(values))


def power_coeffs_step_index(F_i: Real, alpha: Real, i: int) -> Real:
    """
    F_{i+1} = sqrt((2i+3)/(2i+1)) (alpha-i)/(alpha+i+2) F_i.

    Raises:
        DomainError: alpha <= -1/2
    """
    _check_alpha(alpha)
    mp = alpha.context
    return mp.sqrt(mp.mpf(2 * i + 3) / (2 * i + 1)) * (alpha - i) / (alpha + i + 2) * F_i


def power_coeffs_step_degree(F_i_alpha: Real, alpha: Real, i: int, k: int, T: Real) -> Real:
    """
    Shift the degree by a positive integer k:
    F_i^{alpha+k} = T^k [(alpha+1)^(k)]^2 / ((alpha-i+1)^(k) (alpha+i+2)^(k)) F_i^alpha,
    with x^(k) the rising factorial.

    Raises:
        DomainError: alpha <= -1/2 or k < 1
        DegenerateInputError: (alpha-i+1)^(k) vanishes; the caller must fall
            back to the explicit form
    """
    _check_alpha(alpha)
    if k < 1:
        raise DomainError(f"Degree shift must be a positive integer, got {k}")
    mp = alpha.context
    lower = rising_factorial(alpha - i + 1, k)
    if lower == 0:
        raise DegenerateInputError(f"Rising factorial (alpha-i+1)^({k}) vanishes at alpha={alpha}, i={i}")
    upper = rising_factorial(alpha + 1, k)
    return mp.power(mp.mpf(T), k) * upper * upper / (lower * rising_factorial(alpha + i + 2, k)) * F_i_alpha


def power_coeffs_by_index(alpha: Real, L: int, T: Real) -> PowerCoeffVector:
    """Whole vector from F_0 = T^alpha sqrt(T)/(alpha+1) by the index recurrence."""
    _check_alpha(alpha)
    if L < 1:
        raise DomainError(f"Order must be at least 1, got {L}")
    mp = alpha.context
    T = mp.mpf(T)
    values = [_leading(alpha, T) / (alpha + 1)]
    for i in range(L - 1):
        values.append(power_coeffs_step_index(values[i], alpha, i))
    return PowerCoeffVector(alpha=alpha, horizon=T, values=tuple(values))


def power_coeffs_by_degree(alpha: Real, L: int, T: Real) -> PowerCoeffVector:
    """
    Whole vector from the fractional part alpha - floor(alpha), lifted by the
    degree recurrence. Entries where the recurrence is degenerate (integer
    alpha) come from the explicit form.
    """
    _check_alpha(alpha)
    mp = alpha.context
    T = mp.mpf(T)
    shift = int(mp.floor(alpha)) if alpha >= 0 else 0
    if shift == 0:
        return power_coeffs_explicit(alpha, L, T)
    base = power_coeffs_explicit(alpha - shift, L, T)
    explicit = None
    values = []
    for i in range(L):
        try:
            values.append(power_coeffs_step_degree(base[i], alpha - shift, i, shift, T))
        except DegenerateInputError:
            if explicit is None:
                explicit = power_coeffs_explicit(alpha, L, T)
            values.append(explicit[i])
    return PowerCoeffVector(alpha=alpha, horizon=T, values=tuple(values))


def function_norm_sq(alpha: Real, T: Real) -> Real:
    """∫_0^T t^(2 alpha) dt = T^(2 alpha + 1) / (2 alpha + 1)."""
    mp = alpha.context
    return mp.power(mp.mpf(T), 2 * alpha + 1) / (2 * alpha + 1)


def parseval_partial_sums(F: PowerCoeffVector) -> List[Real]:
    """Running sums of F_i^2; bounded above by T^(2 alpha + 1)/(2 alpha + 1)."""
    mp = F.alpha.context
    total = mp.mpf(0)
    sums = []
    for value in F:
        total += value * value
        sums.append(total)
    return sums


def tail_norm_sq(F: PowerCoeffVector) -> Real:
    """Squared L2 error of the truncated expansion of t^alpha."""
    mp = F.alpha.context
    return function_norm_sq(F.alpha, F.horizon) - mp.fsum(F.values, squared=True)


def raabe_duhamel_sequence(F: PowerCoeffVector) -> List[Real]:
    """
    i ((F_i / F_{i+1})^2 - 1) for i = 0..L-2; tends to 4 alpha + 3.

    Raises:
        DegenerateInputError: the vector has exact zeros (integer alpha)
    """
    sequence = []
    for i in range(len(F) - 1):
        nxt = F[i + 1]
        if nxt == 0:
            raise DegenerateInputError(f"F_{i + 1} vanishes; the ratio test needs non-integer alpha")
        ratio = F[i] / nxt
        sequence.append(i * (ratio * ratio - 1))
    logger.debug(f"Ratio test for alpha={F.alpha}: last term {sequence[-1] if sequence else None}")
    return sequence

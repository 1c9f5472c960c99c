"""
Shifted Legendre orthonormal basis on [0, T].
This file provides the exact integer coefficients l_ik of the shifted Legendre
polynomials and pointwise evaluation of the orthonormal basis functions.
Runtime evaluation always goes through the three-term recurrence; the monomial
coefficients are kept for exact identities and cross-checks.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from app.exceptions import CoefficientIndexError, DomainError
from app.utils.numeric import Real

# Set up logging
logger = logging.getLogger(__name__)

# Vector of extended-precision values indexed by basis order
CoeffVector = List[Real]


def legendre_coeff(i: int, k: int) -> int:
    """
    Monomial coefficient l_ik = (-1)^(i-k) C(i+k, i) C(i, i-k) of the shifted
    Legendre polynomial of degree i, as an exact integer.

    Raises:
        CoefficientIndexError: k > i or a negative index
    """
    if i < 0 or k < 0 or k > i:
        raise CoefficientIndexError(f"Need 0 <= k <= i, got i={i}, k={k}")
    value = -1 if i % 2 else 1
    for m in range(k):
        # l_{i,m+1} = -l_{i,m} (i+m+1)(i-m) / (m+1)^2, exact at every step
        value = -value * (i + m + 1) * (i - m) // ((m + 1) * (m + 1))
    return value


def _row(i: int) -> List[int]:
    row = [-1 if i % 2 else 1]
    for m in range(i):
        row.append(-row[-1] * (i + m + 1) * (i - m) // ((m + 1) * (m + 1)))
    return row


class LegendreTable:
    """
    Exact coefficient table l[i][k], 0 <= k <= i < L, for horizon T.

    The table is immutable after construction.
    """

    def __init__(self, L: int, T: Real):
        if L < 1:
            raise DomainError(f"Order must be at least 1, got {L}")
        if T <= 0:
            raise DomainError("Horizon must be positive")
        self._L = L
        self._T = T
        self._rows = tuple(tuple(_row(i)) for i in range(L))

    @property
    def order(self) -> int:
        return self._L

    @property
    def horizon(self) -> Real:
        return self._T

    def coeff(self, i: int, k: int) -> int:
        if not 0 <= k <= i < self._L:
            raise CoefficientIndexError(f"Need 0 <= k <= i < {self._L}, got i={i}, k={k}")
        return self._rows[i][k]

    def row(self, i: int) -> Sequence[int]:
        return self._rows[i]

    def eval_monomial(self, i: int, t: Real) -> Real:
        """
        Basis function P̂(i, t) from the monomial sum.

        Loses roughly i decimal digits to cancellation; use basis_eval for
        anything that matters.
        """
        mp = t.context
        T = mp.mpf(self._T)
        x = t / T
        total = mp.mpf(0)
        power = mp.mpf(1)
        for c in self._rows[i]:
            total += c * power
            power *= x
        return mp.sqrt((2 * i + 1) / T) * total


def _check_point(t: Real, T: Real) -> None:
    if T <= 0:
        raise DomainError("Horizon must be positive")
    if t < 0 or t > T:
        raise DomainError(f"Point {t} lies outside [0, {T}]")


def basis_eval(i: int, t: Real, T: Real) -> Real:
    """
    Orthonormal shifted Legendre function P̂(i, t) on [0, T].

    Args:
        i: Degree (>= 0)
        t: Evaluation point in [0, T]
        T: Horizon

    Returns:
        sqrt((2i+1)/T) * P_i(2t/T - 1) at the precision of t

    Raises:
        DomainError: t outside [0, T]
    """
    if i < 0:
        raise DomainError(f"Degree must be non-negative, got {i}")
    return basis_eval_all(i + 1, t, T)[i]


def basis_eval_all(L: int, t: Real, T: Real) -> CoeffVector:
    """
    Values [P̂(0, t), ..., P̂(L-1, t)] from one pass of the three-term recurrence.

    Raises:
        DomainError: t outside [0, T] or L < 1
    """
    if L < 1:
        raise DomainError(f"Order must be at least 1, got {L}")
    mp = t.context
    T = mp.mpf(T)
    _check_point(t, T)
    x = 2 * t / T - 1
    values = [mp.mpf(1)]
    if L > 1:
        values.append(x)
    for n in range(1, L - 1):
        values.append(((2 * n + 1) * x * values[n] - n * values[n - 1]) / (n + 1))
    return [mp.sqrt((2 * n + 1) / T) * v for n, v in enumerate(values)]


def basis_eval_float(L: int, t: np.ndarray, T: float, out: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Double-precision basis values on a grid, shape (len(t), L).

    Used by path synthesis after the one-time down-conversion of K.
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > T):
        raise DomainError(f"Grid points must lie in [0, {T}]")
    x = 2.0 * t / T - 1.0
    values = out if out is not None else np.empty((t.shape[0], L), dtype=np.float64)
    values[:, 0] = 1.0
    if L > 1:
        values[:, 1] = x
    for n in range(1, L - 1):
        values[:, n + 1] = ((2 * n + 1) * x * values[:, n] - n * values[:, n - 1]) / (n + 1)
    values *= np.sqrt((2.0 * np.arange(L) + 1.0) / T)
    return values

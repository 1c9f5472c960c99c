"""
Matrix representations of the multiplication operator (by t^alpha) and of the
Riemann-Liouville fractional integration operator of order beta in the shifted
Legendre basis on [0, T]. Lower triangles use the cancellation-free running
product forms; upper triangles follow from symmetry (multiplication) or parity
symmetry (integration).
"""
import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

from app.exceptions import DomainError
from app.services.coeffs import power_coeffs_explicit
from app.utils import matrix as mx
from app.utils.numeric import Real, gamma, make_context
from app.utils.parallel import map_ordered

# Set up logging
logger = logging.getLogger(__name__)

# Orders this close to an integer take the exact integer route
INTEGER_SNAP = "1e-30"

# Extra working bits for entry sums
ENTRY_GUARD_BITS = 32


class OperatorKind(str, Enum):
    MULTIPLICATION = "multiplication"
    FRACTIONAL_INTEGRATION = "fractional_integration"


@dataclass(frozen=True)
class OperatorMatrix:
    """Truncated L×L operator matrix with its parameter (alpha or beta)."""

    kind: OperatorKind
    param: Real
    horizon: Real
    entries: mx.Rows

    @property
    def order(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]


def _snap(x: Real) -> Optional[int]:
    """The integer x is within INTEGER_SNAP of, if any."""
    mp = x.context
    n = mp.nint(x)
    if abs(x - n) < mp.mpf(INTEGER_SNAP):
        return int(n)
    return None


def _check_order(L: int) -> None:
    if L < 1:
        raise DomainError(f"Order must be at least 1, got {L}")


def identity_matrix(kind: OperatorKind, param: Real, L: int, T: Real) -> OperatorMatrix:
    _check_order(L)
    mp = param.context
    return OperatorMatrix(kind=kind, param=param, horizon=mp.mpf(T), entries=mx.identity(mp, L))


def _jacobi_matrix(mp, n: int, T: Real) -> mx.Rows:
    """Exact tridiagonal matrix of multiplication by t, (T/2)(I + J)."""
    rows = mx.zeros(mp, n)
    half = mp.mpf(T) / 2
    for j in range(n):
        rows[j][j] = half
        if j + 1 < n:
            m = j + 1
            off = half * m / mp.sqrt(mp.mpf(4 * m * m - 1))
            rows[j][m] = off
            rows[m][j] = off
    return rows


def mult_matrix(alpha: Real, L: int, T: Real, threads: Optional[int] = 1) -> OperatorMatrix:
    """
    Matrix A^alpha of multiplication by t^alpha, A_ij = ∫ t^alpha P̂_i P̂_j dt.

    For i >= j,
        A_ij = sqrt((2j+1)/T) F_i^alpha sum_k (-1)^(j-k) Pi_k,
        Pi_k = Pi_{k-1} ((alpha+k)/k)^2 (j-k+1)/(alpha-i+k) (j+k)/(alpha+i+k+1),
    and A_ji = A_ij. A non-negative integer alpha is the alpha-th power of the
    exact tridiagonal matrix of multiplication by t, built at size L + alpha
    so that its truncation is exact.

    Raises:
        DomainError: alpha <= -1/2 or L < 1
    """
    _check_order(L)
    mp = alpha.context
    if alpha <= mp.mpf(-1) / 2:
        raise DomainError(f"Multiplier t^alpha needs alpha > -1/2, got {alpha}")
    T = mp.mpf(T)
    n = _snap(alpha)
    if n == 0:
        return identity_matrix(OperatorKind.MULTIPLICATION, alpha, L, T)
    if n is not None:
        power = mx.matrix_power(mp, _jacobi_matrix(mp, L + n, T), n, threads)
        return OperatorMatrix(
            kind=OperatorKind.MULTIPLICATION, param=alpha, horizon=T, entries=mx.block(power, L)
        )

    work = make_context(int(mp.prec) + ENTRY_GUARD_BITS).mp
    a = work.mpf(alpha)
    Tw = work.mpf(T)
    F = power_coeffs_explicit(a, L, Tw)

    def lower_row(i: int) -> List[Real]:
        row = []
        for j in range(i + 1):
            prod = work.mpf(1)
            terms = [work.mpf(-1) if j % 2 else work.mpf(1)]
            for k in range(1, j + 1):
                ratio = (a + k) / k
                prod *= ratio * ratio * (j - k + 1) / (a - i + k) * (j + k) / (a + i + k + 1)
                terms.append(prod if (j - k) % 2 == 0 else -prod)
            row.append(work.sqrt((2 * j + 1) / Tw) * F[i] * work.fsum(terms))
        return row

    started = time.perf_counter()
    lower = map_ordered(lower_row, range(L), threads)
    entries = mx.zeros(mp, L)
    for i in range(L):
        for j in range(i + 1):
            value = mp.mpf(lower[i][j])
            entries[i][j] = value
            entries[j][i] = value
    logger.debug(f"Built multiplication matrix alpha={mp.nstr(alpha, 8)} L={L} in {time.perf_counter() - started:.3f}s")
    return OperatorMatrix(kind=OperatorKind.MULTIPLICATION, param=alpha, horizon=T, entries=entries)


def int_matrix(L: int, T: Real) -> OperatorMatrix:
    """
    Exact matrix P^-1 of first-order integration: T/2 at (0,0),
    T/(2 sqrt(4i^2-1)) at (i, i-1), -T/(2 sqrt(4j^2-1)) at (j-1, j).
    """
    _check_order(L)
    mp = T.context
    entries = mx.zeros(mp, L)
    entries[0][0] = T / 2
    for i in range(1, L):
        value = T / (2 * mp.sqrt(mp.mpf(4 * i * i - 1)))
        entries[i][i - 1] = value
        entries[i - 1][i] = -value
    return OperatorMatrix(kind=OperatorKind.FRACTIONAL_INTEGRATION, param=mp.mpf(1), horizon=T, entries=entries)


def int_matrix_power(L: int, T: Real, beta: int, threads: Optional[int] = 1) -> OperatorMatrix:
    """Power (P^-1)^beta of the truncated integration matrix, integer beta >= 2."""
    if isinstance(beta, bool) or not isinstance(beta, int) or beta < 2:
        raise DomainError(f"Integer power must be at least 2, got {beta!r}")
    mp = T.context
    base = int_matrix(L, T)
    entries = mx.matrix_power(mp, base.entries, beta, threads)
    return OperatorMatrix(
        kind=OperatorKind.FRACTIONAL_INTEGRATION, param=mp.mpf(beta), horizon=T, entries=entries
    )


def frac_int_matrix(beta: Real, L: int, T: Real, threads: Optional[int] = 1) -> OperatorMatrix:
    """
    Matrix P^-beta of fractional integration of order beta in (-1/2, 2].

    For i >= j,
        P_ij = sqrt((2j+1)/T) F_i^beta / Gamma(beta+1) sum_k (-1)^(j-k) Pi_k,
        Pi_k = Pi_{k-1} (beta+k)/k (j-k+1)/(beta-i+k) (j+k)/(beta+i+k+1),
    and P_ji = (-1)^(i+j) P_ij. beta = 0 gives the identity, beta = 1 the
    exact integration matrix and beta = 2 its square; orders within 1e-30 of
    these integers are snapped to them.

    Raises:
        DomainError: beta <= -1/2, beta > 2 or L < 1
    """
    _check_order(L)
    mp = beta.context
    T = mp.mpf(T)
    if beta <= mp.mpf(-1) / 2 or beta > 2 + mp.mpf(INTEGER_SNAP):
        raise DomainError(f"Fractional integration order must lie in (-1/2, 2], got {beta}")
    n = _snap(beta)
    if n == 0:
        return identity_matrix(OperatorKind.FRACTIONAL_INTEGRATION, beta, L, T)
    if n == 1:
        return int_matrix(L, T)
    if n == 2:
        return int_matrix_power(L, T, 2, threads)

    work = make_context(int(mp.prec) + ENTRY_GUARD_BITS).mp
    b = work.mpf(beta)
    Tw = work.mpf(T)
    F = power_coeffs_explicit(b, L, Tw)
    scale = 1 / gamma(b + 1)

    def lower_row(i: int) -> List[Real]:
        row = []
        for j in range(i + 1):
            prod = work.mpf(1)
            terms = [work.mpf(-1) if j % 2 else work.mpf(1)]
            for k in range(1, j + 1):
                prod *= (b + k) / k * (j - k + 1) / (b - i + k) * (j + k) / (b + i + k + 1)
                terms.append(prod if (j - k) % 2 == 0 else -prod)
            row.append(scale * work.sqrt((2 * j + 1) / Tw) * F[i] * work.fsum(terms))
        return row

    started = time.perf_counter()
    lower = map_ordered(lower_row, range(L), threads)
    entries = mx.zeros(mp, L)
    for i in range(L):
        for j in range(i + 1):
            value = mp.mpf(lower[i][j])
            entries[i][j] = value
            if i != j:
                entries[j][i] = value if (i + j) % 2 == 0 else -value
    logger.debug(f"Built integration matrix beta={mp.nstr(beta, 8)} L={L} in {time.perf_counter() - started:.3f}s")
    return OperatorMatrix(kind=OperatorKind.FRACTIONAL_INTEGRATION, param=beta, horizon=T, entries=entries)

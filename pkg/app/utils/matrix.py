"""
Dense extended-precision matrix helpers.
Matrices are lists of rows of Reals. Products are plain row-by-column dot
products (no blocking, no fast algorithms); every dot product is an exact
accumulation rounded once, so results do not depend on evaluation order.
"""
from typing import List, Optional, Sequence

from mpmath.ctx_mp import MPContext

from app.utils.numeric import Real
from app.utils.parallel import map_ordered

Rows = List[List[Real]]


def zeros(mp: MPContext, n: int, m: Optional[int] = None) -> Rows:
    m = n if m is None else m
    return [[mp.mpf(0) for _ in range(m)] for _ in range(n)]


def identity(mp: MPContext, n: int) -> Rows:
    rows = zeros(mp, n)
    for i in range(n):
        rows[i][i] = mp.mpf(1)
    return rows


def transpose(a: Sequence[Sequence[Real]]) -> Rows:
    return [list(col) for col in zip(*a)]


def matmul(mp: MPContext, a: Rows, b: Rows, threads: Optional[int] = 1) -> Rows:
    """
    Matrix product a·b at the precision of `mp`.

    Rows of the result are independent and may be computed on a thread pool.
    """
    if not a or not b:
        return []
    if len(a[0]) != len(b):
        raise ValueError(f"Shape mismatch: {len(a)}x{len(a[0])} times {len(b)}x{len(b[0])}")
    columns = transpose(b)

    def row(i: int) -> List[Real]:
        ai = a[i]
        return [mp.fdot(ai, col) for col in columns]

    return map_ordered(row, range(len(a)), threads)


def matvec(mp: MPContext, a: Rows, v: Sequence[Real]) -> List[Real]:
    return [mp.fdot(row, v) for row in a]


def matrix_power(mp: MPContext, a: Rows, k: int, threads: Optional[int] = 1) -> Rows:
    """a^k by repeated left multiplication (k >= 1)."""
    if k < 1:
        raise ValueError(f"Exponent must be positive, got {k}")
    result = [list(r) for r in a]
    for _ in range(k - 1):
        result = matmul(mp, result, a, threads)
    return result


def scale(mp: MPContext, a: Rows, factor: Real) -> Rows:
    return [[mp.mpf(x) * factor for x in r] for r in a]


def subtract(a: Rows, b: Rows) -> Rows:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def block(a: Rows, n: int, m: Optional[int] = None) -> Rows:
    """Top-left n×m block."""
    m = n if m is None else m
    return [list(r[:m]) for r in a[:n]]


def frobenius_sq(mp: MPContext, a: Rows) -> Real:
    """Squared Euclidean (Frobenius) norm, accumulated exactly."""
    flat = [x for r in a for x in r]
    return mp.fdot(flat, flat)


def rerounded(mp: MPContext, a: Rows) -> Rows:
    """Copy of a with every entry rounded to the precision of `mp`."""
    return [[mp.mpf(x) for x in r] for r in a]

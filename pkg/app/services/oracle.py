"""
Independent numerical oracles for the fBm Legendre expansion toolkit.
This file provides Gauss-Legendre rules at context precision, the Gram matrix
of the fBm covariance R_H in the shifted Legendre basis, quadrature of operator
matrix entries, and pointwise values of the kernel k_H through its
hypergeometric closed form. Nothing here feeds production output; it exists to
check the closed-form constructions on small blocks.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from app.config import settings
from app.exceptions import DomainError, OracleFailure
from app.schemas.hurst import HALF
from app.services.kernel import a_const
from app.services.legendre import basis_eval_float, legendre_coeff
from app.services.operators import OperatorKind
from app.utils.numeric import PrecisionContext, Real, gamma, make_context, parse_exact

# Set up logging
logger = logging.getLogger(__name__)

# Exponent of the sigmoidal endpoint-grading map
GRADING_ORDER = 6
# Rule-doubling acceptance
ORACLE_TOLERANCE = 1e-10
MIN_POINTS = 32
# Precision of the series used inside quadrature loops
KERNEL_SERIES_BITS = 96
MAX_SERIES_TERMS = 20000


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes (increasing, symmetric) and weights on [-1, 1]."""

    nodes: Tuple[Real, ...]
    weights: Tuple[Real, ...]

    @property
    def points(self) -> int:
        return len(self.nodes)

    def integrate(self, f: Callable[[Real], Real], a: Real, b: Real) -> Real:
        """∫_a^b f by the affine image of the rule."""
        mp = self.nodes[0].context
        half = (b - a) / 2
        mid = (b + a) / 2
        return half * mp.fdot(self.weights, [f(mid + half * x) for x in self.nodes])


class OracleValue(NamedTuple):
    value: float
    error: float
    points: int
    converged: bool


@dataclass(frozen=True)
class GramBlock:
    """m×m block of G_ij = ∫∫ P̂_i(t) P̂_j(s) R_H(t, s) ds dt."""

    H: str
    T: str
    entries: np.ndarray
    error_estimate: float
    points: int
    converged: bool

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def _legendre_pair(n: int, x: Real) -> Tuple[Real, Real]:
    """(P_n(x), P_{n-1}(x)) by the three-term recurrence."""
    mp = x.context
    p_prev, p = mp.mpf(1), x
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p, p_prev


@lru_cache(maxsize=64)
def _rule(n: int, bits: int) -> QuadratureRule:
    ctx = make_context(bits)
    work = ctx.guarded(32)
    mp = work.mp
    eps = mp.ldexp(mp.mpf(1), -(work.bits - 8))
    positive = []
    for i in range(n // 2):
        x = mp.cos(mp.pi * (4 * i + 3) / (4 * n + 2))
        for _ in range(200):
            p, p_prev = _legendre_pair(n, x)
            dp = n * (x * p - p_prev) / (x * x - 1)
            dx = p / dp
            x -= dx
            if abs(dx) <= eps:
                break
        else:
            raise OracleFailure(f"Newton iteration for Gauss-Legendre node {i} of {n} did not converge")
        p, p_prev = _legendre_pair(n, x)
        dp = n * (x * p - p_prev) / (x * x - 1)
        positive.append((x, 2 / ((1 - x * x) * dp * dp)))
    nodes, weights = [], []
    # positive holds the roots in decreasing order
    for x, w in positive:
        nodes.append(-x)
        weights.append(w)
    if n % 2 == 1:
        _, p_prev = _legendre_pair(n, mp.mpf(0))
        nodes.append(mp.mpf(0))
        weights.append(2 / (n * p_prev) ** 2)
    for x, w in reversed(positive):
        nodes.append(x)
        weights.append(w)
    down = ctx.mp.mpf
    return QuadratureRule(nodes=tuple(down(x) for x in nodes), weights=tuple(down(w) for w in weights))


def gauss_legendre_rule(n: int, ctx: PrecisionContext) -> QuadratureRule:
    """
    n-point Gauss-Legendre rule at context precision, Newton iteration on the
    Legendre recurrence from the standard cosine initial guesses.

    Raises:
        DomainError: n < 1
    """
    if n < 1:
        raise DomainError(f"A quadrature rule needs at least one point, got {n}")
    return _rule(n, ctx.bits)


def _graded_rule(n: int, q: int = GRADING_ORDER) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gauss-Legendre on [0, 1] pushed through u = w^q / (w^q + (1-w)^q).

    Returns (u, 1 - u, weights); the complement is formed directly so that
    powers of 1 - u keep full relative accuracy near u = 1.
    """
    x, w = leggauss(n)
    s = 0.5 * (x + 1.0)
    c = 0.5 * (1.0 - x)
    a = s ** q
    b = c ** q
    d = a + b
    jac = q * s ** (q - 1) * c ** (q - 1) / (d * d)
    return a / d, b / d, 0.5 * w * jac


def _doubling(compute: Callable[[int], np.ndarray], n: int, what: str) -> Tuple[np.ndarray, float, int, bool]:
    """Double the rule from n points until successive results agree to ORACLE_TOLERANCE."""
    n = max(n, MIN_POINTS)
    limit = max(settings.ORACLE_MAX_POINTS, n)
    current = compute(n)
    while True:
        if 2 * n > limit:
            logger.warning(f"{what}: no convergence below {limit} points")
            return current, float("inf"), n, False
        refined = compute(2 * n)
        error = float(np.max(np.abs(refined - current)))
        n *= 2
        current = refined
        if error <= ORACLE_TOLERANCE:
            return current, error, n, True
        if n >= limit:
            logger.warning(f"{what}: error estimate {error:.3e} at {n} points")
            return current, error, n, False


def _exact_hurst(H):
    h = parse_exact(H) if isinstance(H, str) else H
    if not 0 < h < 1:
        raise DomainError(f"Hurst index must lie strictly inside (0, 1), got {H}")
    return h


def gram_block(m: int, H, T, n: int = 64) -> GramBlock:
    """
    Gram block of R_H on [0, T]^2.

    The square is split at the diagonal; on the lower triangle s = t u and
    R_H(t, tu) = t^2H (1 + u^2H - (1-u)^2H) / 2, so the lower part is a smooth
    tensor integral in (t, u) after endpoint grading. The upper part is the
    transpose of the lower one.
    """
    h = float(_exact_hurst(H))
    horizon = float(parse_exact(T) if isinstance(T, str) else T)
    if m < 1:
        raise DomainError(f"Block size must be at least 1, got {m}")

    def compute(points: int) -> np.ndarray:
        u, v, W = _graded_rule(points)
        t = horizon * u
        wt = horizon * W
        Pt = basis_eval_float(m, t, horizon)
        tu = np.minimum(np.outer(t, u), horizon)
        Ptu = basis_eval_float(m, tu.ravel(), horizon).reshape(points, points, m)
        r = 0.5 * (1.0 + u ** (2 * h) - v ** (2 * h))
        inner = np.einsum("b,abj->aj", W * r, Ptu)
        lower = (Pt * (wt * t ** (2 * h + 1))[:, None]).T @ inner
        return lower + lower.T

    entries, error, points, converged = _doubling(compute, n, f"Gram block H={H}")
    return GramBlock(H=str(H), T=str(T), entries=entries, error_estimate=error, points=points, converged=converged)


def gram_RH(i: int, j: int, H, T, n: int = 64) -> OracleValue:
    """
    G_ij = ∫∫ P̂_i(t) P̂_j(s) R_H(t, s) ds dt with a rule-doubling error estimate.

    Raises:
        OracleFailure: no convergence within ORACLE_MAX_POINTS points
    """
    block = gram_block(max(i, j) + 1, H, T, n)
    if not block.converged:
        raise OracleFailure(f"Gram quadrature for ({i}, {j}) at H={H} did not converge "
                            f"(estimate {block.error_estimate:.3e})")
    return OracleValue(float(block.entries[i, j]), block.error_estimate, block.points, True)


def _hyp2f1_series(a: Real, b: Real, c: Real, z: Real) -> Real:
    """Power series of 2F1(a, b; c; z) for 0 <= z <= 1/2, stopped at relative 2^-(bits-16)."""
    mp = z.context
    tol = mp.ldexp(mp.mpf(1), -(int(mp.prec) - 16))
    total = term = mp.mpf(1)
    for k in range(MAX_SERIES_TERMS):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
        if abs(term) <= tol * abs(total):
            return total
    raise OracleFailure(f"Hypergeometric series did not converge in {MAX_SERIES_TERMS} terms at z={mp.nstr(z, 8)}")


@lru_cache(maxsize=128)
def _connection_coefficients(h_exact, bits: int) -> Tuple[Real, Real]:
    ctx = make_context(bits)
    h = ctx.real(h_exact)
    half = ctx.mp.mpf(1) / 2
    gc = gamma(h + half)
    first = gc * gamma(2 * h - 1) / (gamma(2 * h) * gamma(h - half))
    second = gc * gamma(1 - 2 * h) / gamma(half - h)
    return first, second


def _unit_kernel_factor(h_exact, h: Real, w: Real, one_minus_w: Real) -> Real:
    """
    2F1(1/2-H, 1; H+1/2; w) for w in [0, 1), switching to the 1-w connection
    formula above w = 1/2 (2H-1 is not an integer for H != 1/2).
    """
    mp = h.context
    half = mp.mpf(1) / 2
    a = half - h
    if w <= half:
        return _hyp2f1_series(a, mp.mpf(1), h + half, w)
    first, second = _connection_coefficients(h_exact, int(mp.prec))
    return (first * _hyp2f1_series(a, mp.mpf(1), 2 - 2 * h, one_minus_w)
            + second * mp.power(one_minus_w, 2 * h - 1) * _hyp2f1_series(2 * h, h - half, 2 * h, one_minus_w))


def kernel_point(H, t: Real, tau: Real) -> Real:
    """
    k_H(t, tau) = a_H (t - tau)^(H-1/2) 2F1(1/2-H, H-1/2; H+1/2; 1 - t/tau).

    The Pfaff transformation rewrites it as
    a_H (t - tau)^(H-1/2) (tau/t)^(1/2-H) 2F1(1/2-H, 1; H+1/2; 1 - tau/t),
    whose argument lies in [0, 1). H = 1/2 gives 1.

    Raises:
        DomainError: not 0 < tau < t
        OracleFailure: series non-convergence
    """
    h_exact = _exact_hurst(H)
    mp = t.context
    if not 0 < tau < t:
        raise DomainError(f"Kernel needs 0 < tau < t, got tau={tau}, t={t}")
    if h_exact == HALF:
        return mp.mpf(1)
    ctx = make_context(int(mp.prec))
    mp = ctx.mp
    t, tau = mp.mpf(t), mp.mpf(tau)
    h = ctx.real(h_exact)
    half = mp.mpf(1) / 2
    ratio = tau / t
    w = 1 - ratio
    series = _unit_kernel_factor(h_exact, h, w, ratio)
    return a_const(h_exact, ctx) * mp.power(t - tau, h - half) * mp.power(ratio, half - h) * series


def _unit_kernel_values(h_exact, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """k_H(1, u) at the nodes, with v = 1 - u supplied separately."""
    ctx = make_context(KERNEL_SERIES_BITS)
    mp = ctx.mp
    h = ctx.real(h_exact)
    half = mp.mpf(1) / 2
    aH = a_const(h_exact, ctx)
    out = np.empty_like(u)
    for idx, (uu, vv) in enumerate(zip(u, v)):
        ur = mp.mpf(float(uu))
        vr = mp.mpf(float(vv))
        # 1 - tau/t = v, tau/t = u
        value = aH * mp.power(vr, h - half) * mp.power(ur, half - h) * _unit_kernel_factor(h_exact, h, vr, ur)
        out[idx] = float(value)
    return out


def kernel_block(m: int, H, T, n: int = 64) -> GramBlock:
    """
    K_ij = ∫_0^T ∫_0^t P̂_i(t) k_H(t, tau) P̂_j(tau) dtau dt by quadrature,
    using k_H(t, tu) = t^(H-1/2) k_H(1, u) and graded rules in t and u.
    """
    h_exact = _exact_hurst(H)
    horizon = float(parse_exact(T) if isinstance(T, str) else T)
    h = float(h_exact)

    def compute(points: int) -> np.ndarray:
        u, v, W = _graded_rule(points)
        t = horizon * u
        wt = horizon * W
        if h_exact == HALF:
            ku = np.ones_like(u)
        else:
            ku = _unit_kernel_values(h_exact, u, v)
        Pt = basis_eval_float(m, t, horizon)
        tu = np.minimum(np.outer(t, u), horizon)
        Ptu = basis_eval_float(m, tu.ravel(), horizon).reshape(points, points, m)
        inner = np.einsum("b,abj->aj", W * ku, Ptu)
        return (Pt * (wt * t ** (h + 0.5))[:, None]).T @ inner

    entries, error, points, converged = _doubling(compute, n, f"Kernel block H={H}")
    return GramBlock(H=str(H), T=str(T), entries=entries, error_estimate=error, points=points, converged=converged)


def _integration_image(beta: float, j: int, T: float, t: np.ndarray) -> np.ndarray:
    """(J^beta P̂_j)(t) from J^beta t^k = k!/Gamma(k+beta+1) t^(k+beta)."""
    ctx = make_context(KERNEL_SERIES_BITS)
    total = np.zeros_like(t)
    factorial = 1
    for k in range(j + 1):
        if k > 0:
            factorial *= k
        coeff = legendre_coeff(j, k) * factorial / _gamma_float(ctx, k + beta + 1)
        total += coeff * t ** (k + beta) / T ** k
    return np.sqrt((2 * j + 1) / T) * total


def _gamma_float(ctx: PrecisionContext, x: float) -> float:
    return float(gamma(ctx.mp.mpf(x)))


def operator_entry_quadrature(kind, param, i: int, j: int, T, n: int = 64) -> OracleValue:
    """
    A_ij = ∫ t^alpha P̂_i P̂_j dt or P_ij = ∫ P̂_i (J^beta P̂_j) dt by graded
    Gauss-Legendre with rule doubling.
    """
    kind = OperatorKind(kind)
    p = float(param)
    horizon = float(parse_exact(T) if isinstance(T, str) else T)
    m = max(i, j) + 1

    def compute(points: int) -> np.ndarray:
        u, _, W = _graded_rule(points)
        t = horizon * u
        wt = horizon * W
        Pt = basis_eval_float(m, t, horizon)
        if kind == OperatorKind.MULTIPLICATION:
            g = t ** p * Pt[:, j]
        else:
            g = _integration_image(p, j, horizon, t)
        return np.array([np.sum(wt * Pt[:, i] * g)])

    value, error, points, converged = _doubling(compute, n, f"{kind.value}({p}) entry ({i}, {j})")
    return OracleValue(float(value[0]), error, points, converged)

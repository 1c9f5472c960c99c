"""
Reference column formulas for the operator and kernel matrices.

Each entry is expanded over the monomials of P̂_j,
    X_ij = sqrt((2j+1)/T) sum_k l_jk T^-k c_k F_i^(gamma+k),
where the operator maps t^k to c_k t^(gamma+k). The alternating sum loses
digits fast with j, so these run in a widened context and are only meant for
small orders.
"""
from app.services.coeffs import power_coeffs_explicit
from app.services.kernel import a_const
from app.services.legendre import legendre_coeff
from app.utils.numeric import PrecisionContext, gamma, make_context

EXTRA_BITS = 256


def _entry(i, j, T, exponent, image, ctx: PrecisionContext):
    work = make_context(ctx.bits + EXTRA_BITS)
    mp = work.mp
    Tw = mp.mpf(T)
    total = mp.mpf(0)
    for k in range(j + 1):
        F = power_coeffs_explicit(exponent(work) + k, i + 1, Tw)[i]
        total += legendre_coeff(j, k) * image(work, k) * F / mp.power(Tw, k)
    return ctx.mp.mpf(mp.sqrt((2 * j + 1) / Tw) * total)


def mult_entry(alpha: str, i: int, j: int, T, ctx: PrecisionContext):
    """∫ t^alpha P̂_i P̂_j dt."""
    return _entry(i, j, T, lambda w: w.real(alpha), lambda w, k: 1, ctx)


def frac_int_entry(beta: str, i: int, j: int, T, ctx: PrecisionContext):
    """∫ P̂_i J^beta P̂_j dt with J^beta t^k = k!/Gamma(k+beta+1) t^(k+beta)."""
    def image(w, k):
        return w.mp.factorial(k) / gamma(w.real(beta) + k + 1)

    return _entry(i, j, T, lambda w: w.real(beta), image, ctx)


def kernel_entry(H: str, i: int, j: int, T, ctx: PrecisionContext):
    """
    ∫ P̂_i K P̂_j dt with
    K t^k = a_H Gamma(H+1/2+k) Gamma(k+3/2-H) / (k! Gamma(k+3/2+H)) t^(k+H+1/2).
    """
    def image(w, k):
        h = w.real(H)
        half = w.mp.mpf(1) / 2
        return (a_const(H, w) * gamma(h + half + k) * gamma(k + 3 * half - h)
                / (w.mp.factorial(k) * gamma(k + 3 * half + h)))

    return _entry(i, j, T, lambda w: w.real(H) + w.mp.mpf(1) / 2, image, ctx)

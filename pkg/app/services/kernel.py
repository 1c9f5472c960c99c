"""
Kernel matrix service for the fBm Legendre expansion toolkit.
This file builds the L×L matrix K^H of the operator with kernel k_H in the
shifted Legendre basis, either directly from the closed-form entries or as a
product of four truncated operator matrices, and reads and writes the matrix
file format.
"""
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from app.exceptions import ConfigurationError, DomainError, MatrixFormatError
from app.schemas.hurst import HALF, HurstSpec
from app.services.coeffs import power_coeffs_explicit
from app.services.operators import frac_int_matrix, int_matrix, mult_matrix
from app.utils import matrix as mx
from app.utils.numeric import PrecisionContext, Real, gamma, make_context, parse_exact
from app.utils.parallel import map_ordered

# Set up logging
logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
FILE_KIND = "kernel"

# Cancellation in the closed-form sums grows like (1 + sqrt 2)^(2j)
CANCELLATION_BITS_PER_ORDER = 2.55
GUARD_BITS = 32


class Method(str, Enum):
    DIRECT = "direct"
    PRODUCT_PAPER = "product_paper"
    PRODUCT_A = "product_A"
    PRODUCT_B = "product_B"


class Variant(str, Enum):
    PAPER = "paper"
    A = "A"
    B = "B"


PRODUCT_METHODS = {
    Variant.PAPER: Method.PRODUCT_PAPER,
    Variant.A: Method.PRODUCT_A,
    Variant.B: Method.PRODUCT_B,
}


def variant_of(method: Method) -> Optional[Variant]:
    for variant, m in PRODUCT_METHODS.items():
        if m == method:
            return variant
    return None


def concrete_variant(variant: Union[Variant, str], H) -> Variant:
    """The single-formula variant (A or B) that `variant` uses at Hurst index H."""
    variant = Variant(variant)
    if variant != Variant.PAPER:
        return variant
    h = parse_exact(H) if isinstance(H, str) else H
    return Variant.A if h < HALF else Variant.B


@dataclass(frozen=True)
class KernelMatrix:
    """K^H (or a product-form approximation of it) with provenance."""

    spec: HurstSpec
    method: Method
    entries: mx.Rows
    precision_bits: int
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    widened: bool = False

    @property
    def order(self) -> int:
        return len(self.entries)

    @property
    def context(self) -> PrecisionContext:
        return make_context(self.precision_bits)

    def __getitem__(self, ij) -> Real:
        i, j = ij
        return self.entries[i][j]


def _check_hurst(H) -> None:
    if not 0 < H < 1:
        raise DomainError(f"Hurst index must lie strictly inside (0, 1), got {H}")


def a_const(H, ctx: PrecisionContext) -> Real:
    """
    a_H = sqrt(2H Gamma(H+1/2) Gamma(3/2-H) / Gamma(2-2H)); exactly 1 at H = 1/2.

    Args:
        H: Hurst index as an exact decimal string or Fraction
        ctx: Precision context of the result
    """
    h = parse_exact(H) if isinstance(H, str) else H
    _check_hurst(h)
    if h == HALF:
        return ctx.one()
    mp = ctx.mp
    x = ctx.real(h)
    half = mp.mpf(1) / 2
    return mp.sqrt(2 * x * gamma(x + half) * gamma(3 * half - x) / gamma(2 - 2 * x))


def a_const_cosine(H, ctx: PrecisionContext) -> Real:
    """Alternate form a_H = sqrt(pi H (1-2H) / (Gamma(2-2H) cos(pi H))), H != 1/2."""
    h = parse_exact(H) if isinstance(H, str) else H
    _check_hurst(h)
    if h == HALF:
        raise DomainError("The cosine form of a_H is 0/0 at H = 1/2")
    mp = ctx.mp
    x = ctx.real(h)
    return mp.sqrt(mp.pi * x * (1 - 2 * x) / (gamma(2 - 2 * x) * mp.cospi(x)))


def guard_bits(L: int) -> int:
    """Extra working bits for the closed-form entries at order L."""
    return math.ceil(CANCELLATION_BITS_PER_ORDER * (L - 1)) + GUARD_BITS


def _brownian(spec: HurstSpec, method: Method, ctx: PrecisionContext) -> KernelMatrix:
    entries = int_matrix(spec.order, spec.t_real(ctx)).entries
    return KernelMatrix(spec=spec, method=method, entries=entries, precision_bits=ctx.bits,
                        diagnostics={"precision_loss_bits": 0, "guard_bits": 0})


def k_matrix_direct(spec: HurstSpec, ctx: PrecisionContext, threads: Optional[int] = 1) -> KernelMatrix:
    """
    K^H from the closed-form entries

        K_ij = a_H Gamma(1/2-H) sqrt((2j+1)/T) F_i^{H+1/2}
               sum_k (-1)^(j-k) (1/2-H+k)/(H+1/2+k) Pi_k,
        Pi_k = Pi_{k-1} (H+1/2+k)^2 (k-1/2-H)/k^3
               (j-k+1)/(H+1/2-i+k) (j+k)/(H+1/2+i+k+1).

    The alternating sums are evaluated in a guarded context and rounded back.
    H = 1/2 is the exact first-order integration matrix.
    """
    if spec.is_brownian:
        return _brownian(spec, Method.DIRECT, ctx)
    L = spec.order
    extra = guard_bits(L)
    work = ctx.guarded(extra)
    mp = work.mp
    h = spec.h_real(work)
    T = spec.t_real(work)
    half = mp.mpf(1) / 2
    p = h + half
    q = half - h
    F = power_coeffs_explicit(p, L, T)
    lead = a_const(spec.H, work) * gamma(q)
    col_scale = [lead * mp.sqrt((2 * j + 1) / T) for j in range(L)]
    # (H+1/2+k)^2 (k-1/2-H) / k^3 and (1/2-H+k)/(H+1/2+k)
    step = [None] + [(p + k) * (p + k) * (k - p) / (k * k * k) for k in range(1, L)]
    weight = [(q + k) / (p + k) for k in range(L)]

    def row(i: int):
        values = []
        loss = 0
        for j in range(L):
            prod = mp.mpf(1)
            terms = [weight[0] if j % 2 == 0 else -weight[0]]
            for k in range(1, j + 1):
                prod *= step[k] * (j - k + 1) / (p - i + k) * (j + k) / (p + i + k + 1)
                term = weight[k] * prod
                terms.append(term if (j - k) % 2 == 0 else -term)
            total = mp.fsum(terms)
            if total != 0:
                biggest = max(mp.mag(t) for t in terms)
                loss = max(loss, int(biggest - mp.mag(total)))
            values.append(col_scale[j] * F[i] * total)
        return values, loss

    started = time.perf_counter()
    rows = map_ordered(row, range(L), threads)
    loss = max(r[1] for r in rows)
    entries = [[ctx.mp.mpf(x) for x in r[0]] for r in rows]
    elapsed = time.perf_counter() - started
    if loss > extra - GUARD_BITS // 2:
        logger.warning(f"Kernel H={spec.hurst} L={L}: cancellation of {loss} bits exceeds the {extra}-bit guard")
    logger.info(f"Built direct kernel H={spec.hurst} T={spec.horizon} L={L} at {ctx.bits} bits in {elapsed:.2f}s")
    return KernelMatrix(
        spec=spec,
        method=Method.DIRECT,
        entries=entries,
        precision_bits=ctx.bits,
        diagnostics={"precision_loss_bits": loss, "guard_bits": extra, "elapsed_s": elapsed},
    )


def _factors(variant: Variant, h: Real):
    """(beta1, alpha1, beta2, alpha2) of P^-b1 A^a1 P^-b2 A^a2."""
    half = h.context.mpf(1) / 2
    if variant == Variant.A:
        return 2 * h, half - h, half - h, h - half
    return h.context.mpf(1), h - half, h - half, half - h


def k_matrix_product(
    spec: HurstSpec,
    variant: Union[Variant, str],
    ctx: PrecisionContext,
    threads: Optional[int] = 1,
) -> KernelMatrix:
    """
    Product-form approximation a_H P^-b1 A^a1 P^-b2 A^a2 of K^H from four
    truncated L×L operator matrices.

    Variant A:     a_H P^-2H A^(1/2-H) P^-(1/2-H) A^(H-1/2) for every H.
    Variant B:     a_H P^-1 A^(H-1/2) P^-(H-1/2) A^(1/2-H) for every H.
    Variant paper: A for H < 1/2, B for H > 1/2.
    At H = 1/2 every variant is the exact integration matrix.
    """
    variant = Variant(variant)
    method = PRODUCT_METHODS[variant]
    if spec.is_brownian:
        return _brownian(spec, method, ctx)
    L = spec.order
    work = ctx.guarded(GUARD_BITS)
    mp = work.mp
    h = spec.h_real(work)
    T = spec.t_real(work)
    b1, a1, b2, a2 = _factors(concrete_variant(variant, spec.H), h)

    started = time.perf_counter()
    m1 = frac_int_matrix(b1, L, T, threads).entries
    m2 = mult_matrix(a1, L, T, threads).entries
    m3 = frac_int_matrix(b2, L, T, threads).entries
    m4 = mult_matrix(a2, L, T, threads).entries
    product = mx.matmul(mp, mx.matmul(mp, mx.matmul(mp, m1, m2, threads), m3, threads), m4, threads)
    entries = mx.rerounded(ctx.mp, mx.scale(mp, product, a_const(spec.H, work)))
    elapsed = time.perf_counter() - started
    logger.info(f"Built product kernel ({variant.value}) H={spec.hurst} T={spec.horizon} L={L} "
                f"at {ctx.bits} bits in {elapsed:.2f}s")
    return KernelMatrix(
        spec=spec,
        method=method,
        entries=entries,
        precision_bits=ctx.bits,
        diagnostics={"guard_bits": GUARD_BITS, "elapsed_s": elapsed},
    )


def build_kernel(
    spec: HurstSpec,
    method: Union[Method, str],
    ctx: PrecisionContext,
    threads: Optional[int] = 1,
) -> KernelMatrix:
    """Dispatch on the construction method."""
    method = Method(method)
    if method == Method.DIRECT:
        return k_matrix_direct(spec, ctx, threads)
    return k_matrix_product(spec, variant_of(method), ctx, threads)


def rescale(K: KernelMatrix, T_new: str) -> KernelMatrix:
    """
    The same matrix for a new horizon: entries scale by (T_new/T_old)^(H+1/2).
    """
    spec = K.spec.with_horizon(T_new)
    ctx = K.context
    if spec.T == K.spec.T:
        return replace(K, spec=spec)
    mp = ctx.mp
    factor = mp.power(ctx.real(spec.T / K.spec.T), ctx.real(K.spec.H) + mp.mpf(1) / 2)
    return replace(K, spec=spec, entries=mx.scale(mp, K.entries, factor))


def save_matrix(K: KernelMatrix, path: Union[str, Path]) -> None:
    """
    Write the matrix file: one JSON header line, then one line of
    comma-separated decimals per row. Decimals carry enough digits to
    re-parse to the same value at the recorded precision.
    """
    ctx = K.context
    header = {
        "format_version": FORMAT_VERSION,
        "kind": FILE_KIND,
        "H": K.spec.hurst,
        "T": K.spec.horizon,
        "L": K.order,
        "precision_bits": K.precision_bits,
        "method": K.method.value,
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    for row in K.entries:
        lines.append(",".join(ctx.to_decimal_string(x) for x in row))
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    logger.info(f"Saved {K.order}x{K.order} kernel matrix to {path}")


def _read_header(line: str) -> Dict[str, Any]:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as e:
        raise MatrixFormatError(f"Header is not a JSON object: {e}") from e
    if not isinstance(header, dict):
        raise MatrixFormatError("Header is not a JSON object")
    missing = [k for k in ("format_version", "kind", "H", "T", "L", "precision_bits", "method") if k not in header]
    if missing:
        raise MatrixFormatError(f"Header is missing {', '.join(missing)}")
    if header["format_version"] != FORMAT_VERSION:
        raise MatrixFormatError(f"Unsupported format version {header['format_version']!r}")
    if header["kind"] != FILE_KIND:
        raise MatrixFormatError(f"Not a kernel matrix file (kind={header['kind']!r})")
    return header


def load_matrix(path: Union[str, Path], ctx: Optional[PrecisionContext] = None) -> KernelMatrix:
    """
    Read a matrix file.

    Without ctx the matrix comes back at its recorded precision. A lower
    context precision re-rounds the entries (with a warning); a higher one
    widens them exactly and sets the `widened` flag.

    Raises:
        MatrixFormatError: malformed header, version mismatch, wrong row or
            column count, unparseable entries
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        lines = [line.rstrip("\n") for line in f]
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MatrixFormatError(f"{path} is empty")
    header = _read_header(lines[0])
    try:
        spec = HurstSpec(hurst=str(header["H"]), horizon=str(header["T"]), order=int(header["L"]))
        method = Method(header["method"])
        stored = make_context(int(header["precision_bits"]))
    except (ValueError, TypeError, ConfigurationError) as e:
        raise MatrixFormatError(f"Invalid header values: {e}") from e
    L = spec.order
    body = lines[1:]
    if len(body) != L:
        raise MatrixFormatError(f"Header declares L={L} but the file has {len(body)} rows")
    entries: List[List[Real]] = []
    for r, line in enumerate(body):
        cells = line.split(",")
        if len(cells) != L:
            raise MatrixFormatError(f"Row {r} has {len(cells)} entries, expected {L}")
        try:
            entries.append([stored.from_decimal_string(c) for c in cells])
        except ValueError as e:
            raise MatrixFormatError(f"Row {r}: {e}") from e

    target = ctx or stored
    widened = False
    if target.bits < stored.bits:
        logger.warning(f"{path} holds {stored.bits}-bit entries; re-rounding to {target.bits} bits")
        entries = mx.rerounded(target.mp, entries)
    elif target.bits > stored.bits:
        entries = mx.rerounded(target.mp, entries)
        widened = True
    return KernelMatrix(spec=spec, method=method, entries=entries, precision_bits=target.bits,
                        widened=widened, diagnostics={"source": str(path), "stored_bits": stored.bits})

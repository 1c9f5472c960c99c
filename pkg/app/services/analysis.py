"""
Mean-square approximation errors of the truncated fBm expansion.
This file computes epsilon = ||k_H||^2 - ||K̄||^2 for the exact truncated
matrix and epsilon* = epsilon + ||K̄ - K̃||^2 for the product forms, and builds
the error tables over grids of Hurst indices and orders.
"""
import json
import logging
import time
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from app.exceptions import DomainError
from app.schemas.hurst import HALF, HurstSpec
from app.services.kernel import (
    KernelMatrix,
    Method,
    Variant,
    k_matrix_direct,
    k_matrix_product,
    rescale,
    variant_of,
)
from app.utils import matrix as mx
from app.utils.numeric import PrecisionContext, Real, make_context, parse_exact
from app.utils.parallel import map_ordered

# Set up logging
logger = logging.getLogger(__name__)

# Error terms are formed in a wider context and rounded once at the end
ERROR_GUARD_BITS = 64

TABLE_HURST = ["0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9"]
TABLE_ORDERS = [4, 8, 16, 32, 64, 128, 256, 512, 1024]


class TableMethod(str, Enum):
    DIRECT = "direct"
    PRODUCT = "product"


class TableVariant(str, Enum):
    PAPER = "paper"
    A = "A"
    B = "B"
    PAIRED = "paired"


# Grid presets: (method, variant)
TABLE_PRESETS: Dict[str, Tuple[TableMethod, Optional[TableVariant]]] = {
    "table1": (TableMethod.DIRECT, None),
    "table2": (TableMethod.PRODUCT, TableVariant.PAPER),
    "table3": (TableMethod.PRODUCT, TableVariant.PAIRED),
}


@dataclass(frozen=True)
class ErrorReport:
    """Error terms of one (H, T, L, method) configuration."""

    spec: HurstSpec
    method: Method
    epsilon: Real
    kernel_norm_sq: Real
    truncated_norm_sq: Real
    precision_bits: int
    epsilon_star: Optional[Real] = None
    defect_norm_sq: Optional[Real] = None
    kernel: Optional[KernelMatrix] = field(default=None, compare=False, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        ctx = make_context(self.precision_bits)
        fmt = lambda x: None if x is None else ctx.to_decimal_string(x)  # noqa: E731
        return {
            "H": self.spec.hurst,
            "T": self.spec.horizon,
            "L": self.spec.order,
            "method": self.method.value,
            "precision_bits": self.precision_bits,
            "epsilon": fmt(self.epsilon),
            "epsilon_star": fmt(self.epsilon_star),
            "kernel_norm_sq": fmt(self.kernel_norm_sq),
            "truncated_norm_sq": fmt(self.truncated_norm_sq),
            "defect_norm_sq": fmt(self.defect_norm_sq),
        }


def kernel_norm_sq(H, T, ctx: PrecisionContext) -> Real:
    """||k_H||^2 = T^(2H+1)/(2H+1) over the square [0, T]^2."""
    h = ctx.real(H if not isinstance(H, str) else parse_exact(H))
    t = ctx.real(T if not isinstance(T, str) else parse_exact(T))
    return ctx.mp.power(t, 2 * h + 1) / (2 * h + 1)


def relative_error(report: ErrorReport) -> Real:
    """epsilon (or epsilon* when present) relative to ||k_H||^2."""
    value = report.epsilon_star if report.epsilon_star is not None else report.epsilon
    return value / report.kernel_norm_sq


def paired_variant(H) -> Variant:
    """A for H > 1/2 (and at 1/2, where all variants coincide), B for H < 1/2."""
    h = parse_exact(H) if isinstance(H, str) else H
    return Variant.B if h < HALF else Variant.A


def _resolve_variant(variant: Union[Variant, TableVariant, str], H) -> Variant:
    value = variant.value if isinstance(variant, Enum) else variant
    if value == TableVariant.PAIRED.value:
        return paired_variant(H)
    return Variant(value)


def cell_variant(method: Union[TableMethod, str], variant, H) -> Optional[str]:
    """Concrete variant a table cell at H is computed with (None for direct)."""
    if TableMethod(method) == TableMethod.DIRECT:
        return None
    return _resolve_variant(variant or TableVariant.PAPER, H).value


def _report(
    spec: HurstSpec,
    method: Method,
    K_bar: mx.Rows,
    K_tilde: Optional[mx.Rows],
    work: PrecisionContext,
    ctx: PrecisionContext,
    kernel: Optional[KernelMatrix] = None,
) -> ErrorReport:
    mp = work.mp
    k_norm = kernel_norm_sq(spec.H, spec.T, work)
    trunc = mx.frobenius_sq(mp, K_bar)
    epsilon = k_norm - trunc
    defect = star = None
    if K_tilde is not None:
        defect = mx.frobenius_sq(mp, mx.subtract(K_bar, K_tilde))
        star = epsilon + defect
    down = ctx.mp.mpf
    return ErrorReport(
        spec=spec,
        method=method,
        epsilon=down(epsilon),
        kernel_norm_sq=down(k_norm),
        truncated_norm_sq=down(trunc),
        precision_bits=ctx.bits,
        epsilon_star=None if star is None else down(star),
        defect_norm_sq=None if defect is None else down(defect),
        kernel=kernel,
    )


def _rounded_kernel(K: KernelMatrix, ctx: PrecisionContext) -> KernelMatrix:
    return replace(K, entries=mx.rerounded(ctx.mp, K.entries), precision_bits=ctx.bits)


def mse_direct(spec: HurstSpec, ctx: PrecisionContext, threads: Optional[int] = 1) -> ErrorReport:
    """
    epsilon = T^(2H+1)/(2H+1) - sum_{i,j<L} K̄_ij^2 with K̄ from the direct form.

    The kernel is built ERROR_GUARD_BITS wider than ctx so the subtraction
    leaves epsilon accurate at ctx precision.
    """
    work = ctx.guarded(ERROR_GUARD_BITS)
    K = k_matrix_direct(spec, work, threads)
    return _report(spec, Method.DIRECT, K.entries, None, work, ctx, _rounded_kernel(K, ctx))


def mse_product(
    spec: HurstSpec,
    variant: Union[Variant, str],
    ctx: PrecisionContext,
    threads: Optional[int] = 1,
) -> ErrorReport:
    """epsilon* = epsilon + ||K̄ - K̃||^2 with K̃ the product form of the given variant."""
    work = ctx.guarded(ERROR_GUARD_BITS)
    K_bar = k_matrix_direct(spec, work, threads)
    K_tilde = k_matrix_product(spec, _resolve_variant(variant, spec.H), work, threads)
    return _report(spec, K_tilde.method, K_bar.entries, K_tilde.entries, work, ctx,
                   _rounded_kernel(K_tilde, ctx))


def mse_for_method(
    spec: HurstSpec,
    method: Union[Method, str],
    ctx: PrecisionContext,
    threads: Optional[int] = 1,
) -> ErrorReport:
    """Error report of a kernel construction method; its kernel is the matrix that method produces."""
    variant = variant_of(Method(method))
    if variant is None:
        return mse_direct(spec, ctx, threads)
    return mse_product(spec, variant, ctx, threads)


def t_scaling_check(report: ErrorReport, T_new: str) -> ErrorReport:
    """
    The report for horizon T_new obtained by scaling every error term by
    (T_new/T_old)^(2H+1).
    """
    spec = report.spec.with_horizon(T_new)
    ctx = make_context(report.precision_bits)
    mp = ctx.mp
    factor = mp.power(ctx.real(spec.T / report.spec.T), 2 * ctx.real(spec.H) + 1)
    scale = lambda x: None if x is None else x * factor  # noqa: E731
    kernel = None
    if report.kernel is not None:
        kernel = rescale(report.kernel, T_new)
    return replace(
        report,
        spec=spec,
        epsilon=scale(report.epsilon),
        epsilon_star=scale(report.epsilon_star),
        kernel_norm_sq=scale(report.kernel_norm_sq),
        truncated_norm_sq=scale(report.truncated_norm_sq),
        defect_norm_sq=scale(report.defect_norm_sq),
        kernel=kernel,
    )


def round_half_even(x: Real, digits: int) -> str:
    """Fixed-point decimal of x with `digits` places, ties to even."""
    text = make_context(int(x.context.prec)).to_decimal_string(x)
    with localcontext() as dctx:
        dctx.prec = max(len(text) + digits, 64)
        value = Decimal(text).quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_EVEN)
    return f"{value:f}"


@dataclass(frozen=True)
class TableCell:
    """One (H, L) entry of an error table."""

    H: str
    L: int
    epsilon: Real
    method: str
    variant: Optional[str] = None
    epsilon_star: Optional[Real] = None
    truncated_norm_sq: Optional[Real] = None
    defect_norm_sq: Optional[Real] = None

    @property
    def value(self) -> Real:
        return self.epsilon if self.epsilon_star is None else self.epsilon_star


@dataclass(frozen=True)
class ErrorTable:
    """Grid of errors, rows in H-major then L order."""

    horizon: str
    precision_bits: int
    cells: List[TableCell]

    def _fmt(self, x: Optional[Real], digits: Optional[int]) -> Optional[str]:
        if x is None:
            return None
        if digits is None:
            return make_context(self.precision_bits).to_decimal_string(x)
        return round_half_even(x, digits)

    def cell(self, H: str, L: int) -> TableCell:
        for c in self.cells:
            if c.H == H and c.L == L:
                return c
        raise KeyError((H, L))

    def to_csv(self, digits: Optional[int] = 6) -> str:
        lines = ["H,L,value"]
        for c in self.cells:
            lines.append(f"{c.H},{c.L},{self._fmt(c.value, digits)}")
        return "\n".join(lines) + "\n"

    def to_records(self, digits: Optional[int] = 6) -> List[Dict[str, Any]]:
        return [
            {
                "H": c.H,
                "L": c.L,
                "epsilon": self._fmt(c.epsilon, digits),
                "epsilon_star": self._fmt(c.epsilon_star, digits),
                "method": c.method,
                "variant": c.variant,
            }
            for c in self.cells
        ]

    def to_json(self, digits: Optional[int] = 6) -> str:
        return json.dumps(self.to_records(digits), indent=2) + "\n"


CellKey = Tuple[str, int]


def error_table(
    H_list: Sequence[str],
    L_list: Sequence[int],
    T: str,
    method: Union[TableMethod, str],
    variant: Optional[Union[TableVariant, str]],
    ctx: PrecisionContext,
    threads: Optional[int] = 1,
    precomputed: Optional[Dict[CellKey, TableCell]] = None,
) -> ErrorTable:
    """
    epsilon (direct) or epsilon* (product) over the grid H_list × L_list.

    For each H the direct matrix is built once at the largest order; the
    smaller orders read its top-left blocks, since K_ij does not depend on L.
    Cells found in `precomputed` are reused as they are.

    Raises:
        DomainError: empty lists or orders below 1
        ValidationError: invalid Hurst index or horizon
    """
    if not H_list or not L_list:
        raise DomainError("Hurst and order lists must not be empty")
    for L in L_list:
        if L < 1:
            raise DomainError(f"Orders must be at least 1, got {L}")
    method = TableMethod(method)
    if method == TableMethod.PRODUCT and variant is None:
        variant = TableVariant.PAPER
    specs = [HurstSpec(hurst=h, horizon=T, order=max(L_list)) for h in H_list]
    orders = sorted(set(L_list))
    precomputed = precomputed or {}
    started = time.perf_counter()

    def row(spec: HurstSpec) -> List[TableCell]:
        missing = [L for L in orders if (spec.hurst, L) not in precomputed]
        fresh: Dict[int, TableCell] = {}
        if missing:
            work = ctx.guarded(ERROR_GUARD_BITS)
            K_big = k_matrix_direct(spec.with_order(max(missing)), work)
            for L in missing:
                sub = spec.with_order(L)
                K_bar = mx.block(K_big.entries, L)
                if method == TableMethod.DIRECT:
                    rep = _report(sub, Method.DIRECT, K_bar, None, work, ctx)
                    fresh[L] = TableCell(H=spec.hurst, L=L, epsilon=rep.epsilon, method=method.value,
                                         truncated_norm_sq=rep.truncated_norm_sq)
                else:
                    v = _resolve_variant(variant, spec.H)
                    K_tilde = k_matrix_product(sub, v, work)
                    rep = _report(sub, K_tilde.method, K_bar, K_tilde.entries, work, ctx)
                    fresh[L] = TableCell(H=spec.hurst, L=L, epsilon=rep.epsilon, method=method.value,
                                         variant=v.value, epsilon_star=rep.epsilon_star,
                                         truncated_norm_sq=rep.truncated_norm_sq,
                                         defect_norm_sq=rep.defect_norm_sq)
        return [precomputed.get((spec.hurst, L)) or fresh[L] for L in orders]

    rows = map_ordered(row, specs, threads)
    cells = [c for r in rows for c in r]
    logger.info(f"Error table ({method.value}) with {len(cells)} cells in {time.perf_counter() - started:.2f}s")
    return ErrorTable(horizon=specs[0].horizon, precision_bits=ctx.bits, cells=cells)

"""
Command-line front end for the fBm Legendre expansion toolkit.
This file exposes matrix construction, error tables, path simulation and the
validation suite as subcommands of `python -m app.cli`.

Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 validation failure.
"""
import argparse
import asyncio
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from app.config import settings
from app.exceptions import DomainError, FbmError, MatrixFormatError, OracleFailure, ValidationFailure
from app.schemas.hurst import HurstSpec
from app.services.analysis import (
    TABLE_HURST,
    TABLE_ORDERS,
    TABLE_PRESETS,
    ErrorReport,
    TableMethod,
    TableVariant,
    error_table,
    mse_direct,
    mse_for_method,
    mse_product,
    round_half_even,
)
from app.services.kernel import Method, a_const, a_const_cosine, load_matrix, save_matrix
from app.services.oracle import gram_block
from app.services.simulate import (
    estimate_covariance,
    mean_energy_check,
    path_metadata,
    paths_to_csv,
    paths_to_json,
    simulate_paths,
    uniform_grid,
)
from app.utils.logging_config import configure_logging
from app.utils.numeric import PrecisionContext, make_context

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3

METHODS = {
    "direct": Method.DIRECT,
    "product-paper": Method.PRODUCT_PAPER,
    "product-a": Method.PRODUCT_A,
    "product-b": Method.PRODUCT_B,
}

# Oracle block compared in `validate`
GRAM_BLOCK_SIZE = 6
# Absolute slack on top of the Cauchy-Schwarz tail bound
GRAM_SLACK = 1e-9


def _csv_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in _csv_list(text)]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"Not a list of integers: {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=settings.FBM_THREADS,
                        help="Worker threads (outputs do not depend on it)")
    common.add_argument("--precision", type=int, default=settings.FBM_PRECISION_BITS,
                        help="Working precision in bits (env FBM_PRECISION_BITS)")
    common.add_argument("--verbose", action="store_true", help="Log at INFO level")

    spec_args = argparse.ArgumentParser(add_help=False)
    spec_args.add_argument("--horizon", default=settings.DEFAULT_HORIZON, help="Horizon T (decimal or p/q)")
    spec_args.add_argument("--method", choices=sorted(METHODS), default="direct", help="Kernel construction")

    parser = argparse.ArgumentParser(prog="python -m app.cli",
                                     description="fBm Legendre expansion: matrices, errors, paths")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kmatrix", parents=[common, spec_args], help="Build and save the kernel matrix")
    p.add_argument("--hurst", required=True, help="Hurst index H in (0, 1)")
    p.add_argument("--order", type=int, required=True, help="Truncation order L")
    p.add_argument("--output", default="kmatrix.txt", help="Matrix file to write")
    p.add_argument("--round", type=int, default=None, help="Decimal places for the printed errors")
    p.set_defaults(handler=cmd_kmatrix)

    p = sub.add_parser("error-table", parents=[common], help="Mean-square error table over H × L")
    p.add_argument("--reproduce", choices=sorted(TABLE_PRESETS), help="Preset grid and method/variant pairing")
    p.add_argument("--max-order", type=int, default=None, help="Largest L of the preset grid")
    p.add_argument("--hurst-list", type=_csv_list, default=None, help="Comma-separated Hurst indices")
    p.add_argument("--order-list", type=_int_list, default=None, help="Comma-separated orders")
    p.add_argument("--horizon", default=settings.DEFAULT_HORIZON)
    p.add_argument("--method", choices=[m.value for m in TableMethod], default=TableMethod.DIRECT.value)
    p.add_argument("--variant", choices=[v.value for v in TableVariant], default=None)
    p.add_argument("--round", type=int, default=None, help="Decimal places (ties to even)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", default=None, help="Output file (default stdout)")
    p.add_argument("--cache", action="store_true", help="Read and write cells in the result database")
    p.set_defaults(handler=cmd_error_table)

    p = sub.add_parser("simulate", parents=[common, spec_args], help="Sample fBm paths")
    p.add_argument("--hurst", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--grid", type=int, default=101, help="Number of uniform grid points N")
    p.add_argument("--paths", type=int, default=1, help="Number of paths M")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--matrix", default=None, help="Use a saved matrix file instead of building one")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", default=None, help="Output file (default stdout)")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("validate", parents=[common, spec_args], help="Oracle and Monte-Carlo checks")
    p.add_argument("--hurst", default="0.7")
    p.add_argument("--order", type=int, default=16)
    p.add_argument("--paths", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--matrix", default=None, help="Matrix file to check against a recomputation")
    p.add_argument("--output", default=None, help="Report file (default stdout)")
    p.set_defaults(handler=cmd_validate)
    return parser


def _emit(text: str, output: Optional[str]) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _spec(args) -> HurstSpec:
    return HurstSpec(hurst=args.hurst, horizon=args.horizon, order=args.order)


def _fmt(ctx: PrecisionContext, x, digits: Optional[int]) -> str:
    return ctx.to_decimal_string(x) if digits is None else round_half_even(x, digits)


def cmd_kmatrix(args) -> int:
    spec = _spec(args)
    ctx = make_context(args.precision)
    report = mse_for_method(spec, METHODS[args.method], ctx, args.threads)
    save_matrix(report.kernel, args.output)
    lines = [
        f"kernel_norm_sq = {_fmt(ctx, report.kernel_norm_sq, args.round)}",
        f"matrix_norm_sq = {_fmt(ctx, report.truncated_norm_sq, args.round)}",
        f"epsilon = {_fmt(ctx, report.epsilon, args.round)}",
    ]
    if report.epsilon_star is not None:
        lines.append(f"epsilon_star = {_fmt(ctx, report.epsilon_star, args.round)}")
        lines.append(f"defect_norm_sq = {_fmt(ctx, report.defect_norm_sq, args.round)}")
    lines.append(f"matrix = {args.output}")
    _emit("\n".join(lines) + "\n", None)
    return EXIT_OK


def _table_grid(args):
    if args.reproduce:
        method, variant = TABLE_PRESETS[args.reproduce]
    else:
        method, variant = TableMethod(args.method), args.variant
    hursts = args.hurst_list if args.hurst_list is not None else TABLE_HURST
    orders = args.order_list if args.order_list is not None else TABLE_ORDERS
    if args.max_order is not None:
        orders = [L for L in orders if L <= args.max_order]
    return hursts, orders, method, variant


async def _cached_table(hursts, orders, horizon, method, variant, ctx, threads):
    from app.services.result_store import ResultStore, cached_error_table

    store = ResultStore()
    try:
        await store.create_tables()
        return await cached_error_table(store, hursts, orders, horizon, method, variant, ctx, threads)
    finally:
        await store.dispose()


def cmd_error_table(args) -> int:
    hursts, orders, method, variant = _table_grid(args)
    if not hursts or not orders:
        raise DomainError("Hurst and order lists must not be empty")
    ctx = make_context(args.precision)
    if args.cache:
        table = asyncio.run(_cached_table(hursts, orders, args.horizon, method, variant, ctx, args.threads))
    else:
        table = error_table(hursts, orders, args.horizon, method, variant, ctx, args.threads)
    text = table.to_csv(args.round) if args.format == "csv" else table.to_json(args.round)
    _emit(text, args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.paths < 1:
        raise DomainError(f"Number of paths must be positive, got {args.paths}")
    ctx = make_context(args.precision)
    if args.matrix:
        K = load_matrix(args.matrix, ctx)
    else:
        K = mse_for_method(_spec(args), METHODS[args.method], ctx, args.threads).kernel
    grid = uniform_grid(args.grid, K.spec.T)
    paths = simulate_paths(K, args.paths, grid, args.seed, args.threads)
    meta = path_metadata(K, args.seed)
    text = paths_to_csv(paths, meta) if args.format == "csv" else paths_to_json(paths, meta)
    _emit(text, args.output)
    return EXIT_OK


def _check(name: str, passed: bool, **details) -> Dict[str, Any]:
    return {"check": name, "passed": bool(passed), **details}


def check_matrix_file(path: str, threads: int) -> Dict[str, Any]:
    """Compare a saved matrix with a recomputation from its own header."""
    K = load_matrix(path)
    ctx = make_context(K.precision_bits)
    fresh = mse_for_method(K.spec, K.method, ctx, threads).kernel
    mismatches = sum(
        1 for i in range(K.order) for j in range(K.order) if K.entries[i][j] != fresh.entries[i][j]
    )
    return _check("matrix_file", mismatches == 0, path=str(path), mismatched_entries=mismatches)


def check_gram(report: ErrorReport, size: int) -> Dict[str, Any]:
    """
    Top-left block of K̄ K̄^T against the quadrature Gram matrix of R_H. The
    difference is the tail sum over columns >= L, bounded entrywise by
    sqrt(tail_i tail_j) with tail_i the diagonal difference.
    """
    spec = report.spec
    m = min(size, spec.order)
    K = report.kernel.entries
    gram = gram_block(m, spec.hurst, spec.horizon)
    kk = [[float(report.kernel.context.mp.fdot(K[i], K[j])) for j in range(m)] for i in range(m)]
    tails = [max(gram.entries[i, i] - kk[i][i], 0.0) for i in range(m)]
    worst = 0.0
    passed = gram.converged
    for i in range(m):
        for j in range(m):
            diff = abs(gram.entries[i, j] - kk[i][j])
            worst = max(worst, diff)
            bound = (tails[i] * tails[j]) ** 0.5 + gram.error_estimate + GRAM_SLACK
            if diff > bound and diff > settings.GRAM_TOLERANCE:
                passed = False
        if gram.entries[i, i] - kk[i][i] < -(gram.error_estimate + GRAM_SLACK):
            passed = False
    return _check("gram_oracle", passed, size=m, max_abs_diff=worst, oracle_error=gram.error_estimate,
                  oracle_points=gram.points, max_tail=max(tails))


def cmd_validate(args) -> int:
    spec = _spec(args)
    ctx = make_context(args.precision)
    checks = []
    if args.matrix:
        checks.append(check_matrix_file(args.matrix, args.threads))

    direct = mse_direct(spec, ctx, args.threads)
    checks.append(check_gram(direct, GRAM_BLOCK_SIZE))

    product = mse_product(spec, "paper", ctx, args.threads)
    checks.append(_check(
        "product_defect",
        product.defect_norm_sq >= 0 and (not spec.is_brownian or product.defect_norm_sq == 0),
        defect_norm_sq=ctx.to_decimal_string(product.defect_norm_sq),
        epsilon=ctx.to_decimal_string(product.epsilon),
        epsilon_star=ctx.to_decimal_string(product.epsilon_star),
    ))

    if not spec.is_brownian:
        a1, a2 = a_const(spec.H, ctx), a_const_cosine(spec.H, ctx)
        checks.append(_check("a_const_forms", abs(a1 - a2) <= 16 * ctx.ulp(a1),
                             a_const=ctx.to_decimal_string(a1)))

    kernel = direct.kernel if METHODS[args.method] == Method.DIRECT else None
    T = float(spec.T)
    cov = estimate_covariance(spec, METHODS[args.method], args.paths, T / 2, T, args.seed, ctx,
                              args.threads, kernel=kernel)
    limit = settings.MC_SIGMA_LIMIT
    checks.append(_check("mc_covariance", abs(cov.estimate - cov.reference) <= limit * cov.std_error,
                         estimate=cov.estimate, reference=cov.reference, std_error=cov.std_error,
                         fbm_covariance=cov.target))
    energy = mean_energy_check(spec, METHODS[args.method], args.paths, args.seed, ctx, args.threads,
                               kernel=kernel)
    checks.append(_check("mc_energy", abs(energy.estimate - energy.exact) <= limit * energy.std_error,
                         estimate=energy.estimate, exact=energy.exact, std_error=energy.std_error))

    passed = all(c["passed"] for c in checks)
    report = {"H": spec.hurst, "T": spec.horizon, "L": spec.order, "precision_bits": ctx.bits,
              "passed": passed, "checks": checks}
    _emit(json.dumps(report, indent=2) + "\n", args.output)
    if not passed:
        raise ValidationFailure("; ".join(c["check"] for c in checks if not c["passed"]))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(logging.INFO if args.verbose else settings.LOG_LEVEL, stream=sys.stderr)
    started = time.perf_counter()
    try:
        code = args.handler(args)
        logger.info(f"{args.command} finished in {time.perf_counter() - started:.2f}s")
        return code
    except ValidationError as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_USAGE
    except MatrixFormatError as e:
        logger.error(f"Matrix file error: {e}", exc_info=True)
        return EXIT_VALIDATION if args.command == "validate" else EXIT_IO
    except (OracleFailure, ValidationFailure) as e:
        logger.error(f"Validation failed: {e}")
        return EXIT_VALIDATION
    except FbmError as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"I/O error: {e}", exc_info=True)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""
API endpoint for mean-square errors of a single kernel configuration.
This file defines the route computing epsilon / epsilon* for (H, T, L, method),
answering from the result cache when the configuration was computed before.
"""
import logging
from typing import Optional

from fastapi import APIRouter, Request
from fastapi.concurrency import run_in_threadpool

from app.config import settings
from app.schemas.hurst import HurstSpec
from app.schemas.kernel import ErrorReportResponse, KernelErrorRequest
from app.services.analysis import kernel_norm_sq, mse_for_method
from app.services.kernel import Method
from app.services.result_store import ResultStore, key_for
from app.utils.numeric import make_context

# Set up logging
logger = logging.getLogger(__name__)

# Create router
router = APIRouter()


def get_store(request: Request) -> Optional[ResultStore]:
    """The application's result store, or None when the database is unavailable."""
    return getattr(request.app.state, "store", None)


@router.post("/errors", response_model=ErrorReportResponse)
async def kernel_errors(body: KernelErrorRequest, request: Request):
    """
    Compute epsilon (and epsilon*, the defect for product methods).
    """
    spec = HurstSpec(hurst=body.hurst, horizon=body.horizon, order=body.order)
    method = Method(body.method)
    ctx = make_context(body.precision_bits)
    store = get_store(request)

    if store is not None:
        row = await store.get(key_for(spec, method, ctx.bits))
        if row is not None:
            logger.info(f"Cache hit for H={spec.hurst} L={spec.order} {method.value}")
            return ErrorReportResponse(
                H=spec.hurst,
                T=spec.horizon,
                L=spec.order,
                method=method.value,
                precision_bits=ctx.bits,
                epsilon=row.epsilon,
                epsilon_star=row.epsilon_star,
                kernel_norm_sq=ctx.to_decimal_string(kernel_norm_sq(spec.H, spec.T, ctx)),
                truncated_norm_sq=row.truncated_norm_sq,
                defect_norm_sq=row.defect_norm_sq,
                cached=True,
            )

    report = await run_in_threadpool(mse_for_method, spec, method, ctx, settings.FBM_THREADS)
    if store is not None:
        await store.put_report(report)
    return ErrorReportResponse(**report.to_dict())

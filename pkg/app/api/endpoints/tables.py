"""
API endpoint for error tables over grids of Hurst indices and orders.
Cells are read from and written to the result cache when it is available.
"""
import logging

from fastapi import APIRouter, Request
from fastapi.concurrency import run_in_threadpool

from app.api.endpoints.kernel import get_store
from app.config import settings
from app.schemas.kernel import TableRequest, TableResponse
from app.services.analysis import error_table
from app.services.result_store import cached_error_table
from app.utils.numeric import make_context

# Set up logging
logger = logging.getLogger(__name__)

# Create router
router = APIRouter()


@router.post("", response_model=TableResponse)
async def build_table(body: TableRequest, request: Request):
    """
    Compute epsilon (direct) or epsilon* (product) for every (H, L) pair.
    """
    ctx = make_context(body.precision_bits)
    store = get_store(request)
    if store is not None:
        table = await cached_error_table(store, body.hurst_list, body.order_list, body.horizon,
                                         body.method, body.variant, ctx, settings.FBM_THREADS)
    else:
        logger.warning("Result store unavailable, computing table without cache")
        table = await run_in_threadpool(error_table, body.hurst_list, body.order_list, body.horizon,
                                        body.method, body.variant, ctx, settings.FBM_THREADS)
    return TableResponse(horizon=table.horizon, precision_bits=table.precision_bits,
                         cells=table.to_records(body.round))

"""
API endpoint for fBm path simulation.
"""
import logging

from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool

from app.config import settings
from app.schemas.hurst import HurstSpec
from app.schemas.simulation import PathResponse, SimulateRequest, SimulateResponse
from app.services.analysis import mse_for_method
from app.services.simulate import path_metadata, simulate_paths, uniform_grid
from app.utils.numeric import make_context

# Set up logging
logger = logging.getLogger(__name__)

# Create router
router = APIRouter()


def _simulate(body: SimulateRequest) -> SimulateResponse:
    spec = HurstSpec(hurst=body.hurst, horizon=body.horizon, order=body.order)
    ctx = make_context(body.precision_bits)
    K = mse_for_method(spec, body.method, ctx, settings.FBM_THREADS).kernel
    paths = simulate_paths(K, body.paths, uniform_grid(body.grid, spec.T), body.seed, settings.FBM_THREADS)
    return SimulateResponse(
        metadata=path_metadata(K, body.seed),
        paths=[
            PathResponse(path=s.path, t=[float(t) for t in s.grid], value=[float(x) for x in s.values])
            for s in paths
        ],
    )


@router.post("", response_model=SimulateResponse)
async def simulate(body: SimulateRequest):
    """
    Sample paths of the truncated expansion on a uniform grid.
    """
    return await run_in_threadpool(_simulate, body)

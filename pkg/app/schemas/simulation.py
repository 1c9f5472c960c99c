"""
Pydantic schemas for the path simulation endpoint.
"""
from typing import Any, Dict, List

from pydantic import BaseModel, Field

from app.config import settings


class SimulateRequest(BaseModel):
    """Schema for a path simulation request."""
    hurst: str = Field(..., description="Hurst index H in (0, 1)")
    horizon: str = Field(settings.DEFAULT_HORIZON, description="Horizon T")
    order: int = Field(..., ge=1, le=1024, description="Truncation order L")
    method: str = Field("direct", pattern="^(direct|product_paper|product_A|product_B)$")
    grid: int = Field(101, ge=2, le=100000, description="Number of uniform grid points")
    paths: int = Field(1, ge=1, le=10000, description="Number of paths")
    seed: int = Field(0, ge=0, description="Random seed")
    precision_bits: int = Field(settings.FBM_PRECISION_BITS, ge=64)


class PathResponse(BaseModel):
    path: int
    t: List[float]
    value: List[float]


class SimulateResponse(BaseModel):
    """Schema for simulated paths and their metadata."""
    metadata: Dict[str, Any]
    paths: List[PathResponse]

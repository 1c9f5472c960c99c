"""
Pydantic schemas for the kernel error and error-table endpoints.
This file defines request validation for error computations and the decimal-string
responses returned by the API.
"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.config import settings


class KernelErrorRequest(BaseModel):
    """Schema for a single error computation."""
    hurst: str = Field(..., description="Hurst index H in (0, 1), exact decimal string")
    horizon: str = Field(settings.DEFAULT_HORIZON, description="Horizon T, decimal or p/q")
    order: int = Field(..., ge=1, le=1024, description="Truncation order L")
    method: str = Field("direct", pattern="^(direct|product_paper|product_A|product_B)$",
                        description="Kernel construction method")
    precision_bits: int = Field(settings.FBM_PRECISION_BITS, ge=64, description="Working precision in bits")


class ErrorReportResponse(BaseModel):
    """Schema for an error report; numbers are full-precision decimal strings."""
    H: str
    T: str
    L: int
    method: str
    precision_bits: int
    epsilon: str
    epsilon_star: Optional[str] = None
    kernel_norm_sq: str
    truncated_norm_sq: str
    defect_norm_sq: Optional[str] = None
    cached: bool = Field(False, description="Whether the result was already stored")


class TableRequest(BaseModel):
    """Schema for an error table over H × L."""
    hurst_list: List[str] = Field(..., min_length=1, description="Hurst indices")
    order_list: List[int] = Field(..., min_length=1, description="Truncation orders")
    horizon: str = Field(settings.DEFAULT_HORIZON, description="Horizon T")
    method: str = Field("direct", pattern="^(direct|product)$")
    variant: Optional[str] = Field(None, pattern="^(paper|A|B|paired)$")
    precision_bits: int = Field(settings.FBM_PRECISION_BITS, ge=64)
    round: Optional[int] = Field(None, ge=0, le=100, description="Decimal places, ties to even")


class TableResponse(BaseModel):
    """Schema for an error table response."""
    horizon: str
    precision_bits: int
    cells: List[Dict[str, Any]] = Field(default_factory=list)

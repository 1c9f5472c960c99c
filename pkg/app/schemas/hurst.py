"""
Validated problem specification for the fBm Legendre expansion toolkit.
This file defines HurstSpec: the Hurst index H and horizon T as exact decimal
strings plus the truncation order L. Every construction starts from one.
"""
from fractions import Fraction

from pydantic import BaseModel, Field, field_validator

from app.utils.numeric import PrecisionContext, Real, format_exact, parse_exact

HALF = Fraction(1, 2)


class HurstSpec(BaseModel):
    """Hurst index, horizon and truncation order."""
    hurst: str = Field(..., description="Hurst index H in (0, 1), exact decimal string")
    horizon: str = Field("1", description="Horizon T > 0, exact decimal or p/q string")
    order: int = Field(..., ge=1, description="Truncation order L (matrix size)")

    class Config:
        frozen = True

    @field_validator("hurst")
    @classmethod
    def _check_hurst(cls, value: str) -> str:
        h = parse_exact(value)
        if not 0 < h < 1:
            raise ValueError(f"Hurst index must lie strictly inside (0, 1), got {value}")
        return format_exact(h)

    @field_validator("horizon")
    @classmethod
    def _check_horizon(cls, value: str) -> str:
        t = parse_exact(value)
        if t <= 0:
            raise ValueError(f"Horizon must be positive, got {value}")
        return format_exact(t)

    @property
    def H(self) -> Fraction:
        return parse_exact(self.hurst)

    @property
    def T(self) -> Fraction:
        return parse_exact(self.horizon)

    @property
    def is_brownian(self) -> bool:
        """H = 1/2 exactly (standard Wiener process)."""
        return self.H == HALF

    def h_real(self, ctx: PrecisionContext) -> Real:
        return ctx.real(self.H)

    def t_real(self, ctx: PrecisionContext) -> Real:
        return ctx.real(self.T)

    def with_order(self, order: int) -> "HurstSpec":
        return HurstSpec(hurst=self.hurst, horizon=self.horizon, order=order)

    def with_horizon(self, horizon: str) -> "HurstSpec":
        return HurstSpec(hurst=self.hurst, horizon=horizon, order=self.order)

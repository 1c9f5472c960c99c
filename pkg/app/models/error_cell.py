"""
Error-table cell database model for the fBm Legendre expansion toolkit.
This file defines the SQLAlchemy ORM model caching computed mean-square errors,
one row per (H, T, L, method, variant, precision) configuration.
"""
import uuid

from sqlalchemy import Column, DateTime, Integer, String, UniqueConstraint
from sqlalchemy.sql import func

from app.database import Base


class ErrorCell(Base):
    """A computed error-table cell. Numbers are full-precision decimal strings."""

    __tablename__ = "error_cells"
    __table_args__ = (
        UniqueConstraint("hurst", "horizon", "order", "method", "variant", "precision_bits",
                         name="uq_error_cell_key"),
    )

    id = Column(String, primary_key=True, default=lambda: str(uuid.uuid4()))
    hurst = Column(String, nullable=False)
    horizon = Column(String, nullable=False)
    order = Column(Integer, nullable=False)
    method = Column(String, nullable=False)  # 'direct' or 'product'
    variant = Column(String, nullable=False, default="")  # '' for direct
    precision_bits = Column(Integer, nullable=False)

    epsilon = Column(String, nullable=False)
    epsilon_star = Column(String, nullable=True)
    defect_norm_sq = Column(String, nullable=True)
    truncated_norm_sq = Column(String, nullable=True)
    created_at = Column(DateTime(timezone=True), server_default=func.now())

"""
Main API router configuration for the fBm Legendre expansion service.
This file defines the main API router and includes all endpoint routers.
"""
from fastapi import APIRouter

from app.api.endpoints import kernel, simulate, tables

# Create main API router
api_router = APIRouter()

# Include endpoint routers
api_router.include_router(kernel.router, prefix="/kernel", tags=["kernel"])
api_router.include_router(tables.router, prefix="/tables", tags=["tables"])
api_router.include_router(simulate.router, prefix="/simulate", tags=["simulate"])

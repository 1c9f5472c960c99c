"""
Main FastAPI application for the fBm Legendre expansion service.
This file initializes the FastAPI application, the result store and all routers.
"""
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from app.api.api import api_router
from app.config import settings
from app.exceptions import FbmError, OracleFailure, ParseError
from app.services.result_store import ResultStore
from app.utils.logging_config import configure_logging

# Set up logging using centralized configuration
configure_logging(settings.LOG_LEVEL)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Lifespan events for application startup and shutdown."""
    app.state.store = None
    try:
        logger.info("Initializing result store...")
        store = ResultStore()
        await store.create_tables()
        app.state.store = store
        logger.info("Result store initialized successfully")
    except Exception as e:
        logger.error(f"Error during database initialization: {str(e)}", exc_info=True)
        logger.warning("Application will continue without the result cache")

    yield  # This separates startup from shutdown events

    if app.state.store is not None:
        await app.state.store.dispose()


# Create FastAPI app
app = FastAPI(
    title=settings.APP_NAME,
    description="Mean-square errors, kernel matrices and sample paths of fractional Brownian motion "
                "in the shifted Legendre basis",
    version="1.0.0",
    lifespan=lifespan,
)

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(api_router, prefix="/api")


@app.get("/")
async def root():
    """Root endpoint returning the service banner."""
    return {"message": f"{settings.APP_NAME} API. See /docs for the available endpoints.",
            "precision_bits": settings.FBM_PRECISION_BITS}


def _status_for(exc: FbmError) -> int:
    if isinstance(exc, ParseError):
        return 422
    if isinstance(exc, OracleFailure):
        return 500
    return 400


@app.exception_handler(FbmError)
async def fbm_exception_handler(request: Request, exc: FbmError):
    """Map toolkit errors to client errors."""
    status = _status_for(exc)
    logger.warning(f"{type(exc).__name__} on {request.url.path}: {exc}")
    return JSONResponse(status_code=status, content={"detail": str(exc), "error": type(exc).__name__})


@app.exception_handler(ValidationError)
async def validation_exception_handler(request: Request, exc: ValidationError):
    """Invalid values that passed request parsing but failed model validation."""
    return JSONResponse(status_code=422, content={"detail": exc.errors(include_url=False, include_context=False)})


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """Global exception handler for unhandled exceptions."""
    logger.error(f"Unhandled exception: {str(exc)}", exc_info=True)
    return JSONResponse(
        status_code=500,
        content={"detail": "An unexpected error occurred. Please try again later."}
    )

"""
Database configuration and utilities for the fBm Legendre expansion toolkit.
This file handles engine setup for the error-table result cache, session
management, and table creation.
"""
import logging
import os
from typing import Optional

from sqlalchemy.engine import make_url
from sqlalchemy.ext.asyncio import AsyncEngine, AsyncSession, create_async_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from app.config import settings

# Set up logging
logger = logging.getLogger(__name__)

# Create declarative base
Base = declarative_base()


def make_engine(url: Optional[str] = None) -> AsyncEngine:
    """
    Create an async engine for `url` (default settings.DATABASE_URL).
    For SQLite files the parent directory is created first.
    """
    url = url or settings.DATABASE_URL
    parsed = make_url(url)
    logger.info(f"Using result database at {url}")
    if parsed.get_backend_name() == "sqlite":
        path = parsed.database
        if path and path != ":memory:":
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        return create_async_engine(url, echo=settings.DEBUG, future=True,
                                   connect_args={"check_same_thread": False})
    return create_async_engine(url, echo=settings.DEBUG, future=True)


def session_factory(bind: AsyncEngine) -> sessionmaker:
    return sessionmaker(bind, class_=AsyncSession, expire_on_commit=False)


async def create_db_and_tables(bind: AsyncEngine) -> None:
    """Create all database tables. Called during application startup."""
    # Register the models on Base.metadata
    from app.models import error_cell  # noqa: F401

    logger.info("Creating database tables...")
    async with bind.begin() as conn:
        await conn.run_sync(Base.metadata.create_all)
    logger.info("Database tables created successfully")

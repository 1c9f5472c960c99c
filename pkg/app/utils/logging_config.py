"""
Logging configuration for the fBm Legendre expansion toolkit.
This file provides centralized logging configuration for the CLI and the API.
"""
import logging
import sys


def configure_logging(log_level=logging.WARNING, stream=None):
    """
    Configure logging for the application.

    Args:
        log_level: Logging level, either a logging constant or a level name
            such as "INFO" (default: WARNING to reduce verbosity)
        stream: Handler stream (default stdout; the CLI keeps stdout for results)
    """
    if isinstance(log_level, str):
        log_level = logging.getLevelName(log_level.upper())
        if not isinstance(log_level, int):
            log_level = logging.WARNING

    # Configure root logger
    logging.basicConfig(
        level=log_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(stream or sys.stdout)
        ]
    )
    logging.getLogger().setLevel(log_level)

    # Set SQLAlchemy logging to be more quiet
    logging.getLogger('sqlalchemy.engine').setLevel(logging.WARNING)
    logging.getLogger('sqlalchemy').setLevel(logging.WARNING)
    logging.getLogger('aiosqlite').setLevel(logging.WARNING)

    # Set uvicorn and fastapi to warning level
    logging.getLogger('uvicorn').setLevel(logging.WARNING)
    logging.getLogger('uvicorn.access').setLevel(logging.WARNING)
    logging.getLogger('fastapi').setLevel(logging.WARNING)

import sys
from typing import Optional

from loguru import logger

from app.core.config import get_settings

# Reports and JSON summaries go to stdout; logs go to stderr.
_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {message}"


def configure_logging(level: Optional[str] = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level=(level or get_settings().log_level).upper(), format=_FORMAT)


configure_logging()

# Explicit export
__all__ = ["logger", "configure_logging"]

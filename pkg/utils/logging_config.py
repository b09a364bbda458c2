"""
Logging configuration module
"""
import logging
import sys
from pathlib import Path
from typing import Optional


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None,
                  logs_dir: Path = Path("logs")):
    """Setup logging configuration"""

    # stdout carries the JSON reports
    handlers = [logging.StreamHandler(sys.stderr)]

    if log_file:
        log_path = Path(logs_dir)
        log_path.mkdir(exist_ok=True, parents=True)
        handlers.append(logging.FileHandler(log_path / log_file))

    level = getattr(logging, str(log_level).upper(), None)
    if not isinstance(level, int):
        level = logging.INFO

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )

    logger = logging.getLogger(__name__)
    logger.debug("Logging configured successfully")

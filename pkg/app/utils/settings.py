"""
Environment-level settings read from config/.env.
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

# Load environment variables
load_dotenv(os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(__file__))), 'config', '.env'))


@dataclass(frozen=True)
class Settings:
    log_level: str = "INFO"
    jobs: int = 1


def get_settings() -> Settings:
    level = os.getenv("LOG_LEVEL", "INFO").upper()
    try:
        jobs = max(1, int(os.getenv("DUMBBELL_JOBS", "1")))
    except ValueError:
        jobs = 1
    return Settings(log_level=level, jobs=jobs)


def configure_logging(level: Optional[str] = None) -> None:
    level = (level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

import logging
import logging.config
import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()


class Settings:
    # Vertex guard shared by every brute-force oracle (is_uso, bijection check, violation search)
    ORACLE_MAX_VERTICES = int(os.getenv("USOLAB_GUARD", "4096"))
    # Bit-width guard for exhaustive enumeration of reduced instances
    ENUM_MAX_BITS = int(os.getenv("USOLAB_ENUM_BITS", "24"))
    SWEEP_MAX_EDGES = int(os.getenv("USOLAB_SWEEP_MAX_EDGES", "12"))
    SWEEP_SAMPLE_SIZE = int(os.getenv("USOLAB_SWEEP_SAMPLE", "256"))
    SWEEP_WORKERS = int(os.getenv("USOLAB_WORKERS", "1"))
    LOG_LEVEL = os.getenv("USOLAB_LOG_LEVEL", "WARNING")
    LOGGING_CONFIG = os.getenv(
        "USOLAB_LOGGING_CONFIG",
        os.path.join(os.path.dirname(os.path.abspath(__file__)), "logging.ini"),
    )


settings = Settings()


def setup_logging(level: Optional[str] = None) -> None:
    """Configure logging from logging.ini when present, basicConfig otherwise."""
    if os.path.exists(settings.LOGGING_CONFIG):
        logging.config.fileConfig(settings.LOGGING_CONFIG, disable_existing_loggers=False)
    else:
        logging.basicConfig(format="%(levelname)-5.5s [%(name)s] %(message)s")
    logging.getLogger().setLevel(level or settings.LOG_LEVEL)

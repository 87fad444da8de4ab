from __future__ import annotations

import logging
from logging.config import dictConfig


def configure_logging(level: str = "INFO") -> None:
    """
    Route all netfactor logging to stderr at `level`.

    stdout carries command output (JSON metrics, report paths), so log lines
    must never land there. Python warnings (numpy overflow and invalid-value
    RuntimeWarnings from the solvers) are captured as `py.warnings` records.
    """

    level = (level or "INFO").upper()

    dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "default": {
                    "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
                }
            },
            "handlers": {
                "stderr": {
                    "class": "logging.StreamHandler",
                    "formatter": "default",
                    "stream": "ext://sys.stderr",
                }
            },
            "root": {"level": level, "handlers": ["stderr"]},
            "loggers": {
                "py.warnings": {"level": "WARNING"},
            },
        }
    )
    logging.captureWarnings(True)

    logging.getLogger(__name__).debug("Logging configured: level=%s", level)

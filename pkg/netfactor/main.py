from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from pydantic import ValidationError

from netfactor import __version__
from netfactor.commands import register_eval, register_experiment, register_factorize, register_synth
from netfactor.config import get_settings
from netfactor.errors import NetFactorError
from netfactor.logging_config import configure_logging

logger = logging.getLogger(__name__)


def build_parser(default_log_level: str = "INFO") -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netfactor",
        description="Structure-preserving factorization of a vertical matrix with horizontal networks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", dest="log_level", default=default_log_level)
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    register_factorize(subparsers)
    register_synth(subparsers)
    register_experiment(subparsers)
    register_eval(subparsers)
    return parser


def _one_line(e: ValidationError) -> str:
    first = e.errors()[0]
    where = ".".join(str(p) for p in first.get("loc", ())) or "value"
    return f"invalid {where}: {first.get('msg', 'validation failed')}"


def cli_main(argv: Sequence[str] | None = None) -> int:
    settings = get_settings()
    parser = build_parser(settings.log_level)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 for --help/--version.
        return int(e.code or 0)

    configure_logging(args.log_level)
    try:
        return int(args.handler(args, settings))
    except ValidationError as e:
        message = _one_line(e)
    except (NetFactorError, OSError) as e:
        message = str(e)
    logger.error("%s failed: %s", args.command, message)
    print(f"error: {message}", file=sys.stderr)
    return 1

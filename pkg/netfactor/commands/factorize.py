from __future__ import annotations

import argparse
import logging
from pathlib import Path

from netfactor.commands.options import add_factor_options, add_variant_option, factor_config
from netfactor.config import Settings
from netfactor.errors import InputError
from netfactor.factor import factorize
from netfactor.matrix_io import load_matrix, load_network, save_matrix, save_trace
from netfactor.models import Variant

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("factorize", help="Factorize V with one or two horizontal networks.")
    parser.add_argument("--v", type=Path, required=True, help="Vertical matrix V (coordinate file).")
    parser.add_argument("--h", type=Path, help="Horizontal network over the rows of V.")
    parser.add_argument("--h2", type=Path, help="Horizontal network over the columns of V.")
    parser.add_argument("--out", type=Path, help="Output directory for A.mtx, X.mtx, trace.csv.")
    add_variant_option(parser)
    add_factor_options(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, settings: Settings) -> int:
    variant = Variant(args.variant)
    cfg = factor_config(args)
    if variant != Variant.plain and args.h is None:
        raise InputError(f"--variant {variant.value} needs --h")

    v = load_matrix(args.v)
    h1 = load_network(args.h) if args.h is not None else None
    h2 = load_network(args.h2) if args.h2 is not None else None

    result = factorize(v, h1, h2, variant, cfg)

    out = args.out or settings.output_dir
    out.mkdir(parents=True, exist_ok=True)
    save_matrix(result.a, out / "A.mtx")
    save_matrix(result.x, out / "X.mtx")
    save_trace(result.trace, out / "trace.csv")
    logger.info("Wrote A.mtx, X.mtx, trace.csv to %s", out)
    print(f"{variant.label}: {result.iterations} iterations, {result.terminated.value}, cost={result.final_cost:.10g}")
    return 0

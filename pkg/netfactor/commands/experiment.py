from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Any

from netfactor.config import Settings
from netfactor.experiments import ExperimentStore, load_experiment_spec
from netfactor.models import ExperimentSpec
from netfactor.services.experiments_service import format_summary_table, run_experiment

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("experiment", help="Run an experiment protocol from a config file.")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=Path, help="Path to a JSON experiment config.")
    source.add_argument("--name", help="Name of a bundled config in the experiments directory.")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--max-iter", dest="max_iter", type=int)
    parser.add_argument("--out", type=Path, help="Report directory.")
    parser.add_argument("--workers", type=int, help="Concurrent trials.")
    parser.set_defaults(handler=run)


def resolve_spec(args: argparse.Namespace, settings: Settings) -> ExperimentSpec:
    if args.config is not None:
        spec = load_experiment_spec(args.config)
    else:
        store = ExperimentStore(settings.experiments_dir)
        store.reload()
        spec = store.get(args.name)

    overrides: dict[str, Any] = {
        "trials": args.trials,
        "seed": args.seed,
        "alpha": args.alpha,
        "max_iter": args.max_iter,
        "output_path": args.out,
    }
    if args.trials is None and "trials" not in spec.model_fields_set:
        overrides["trials"] = settings.default_trials
    if args.out is None and "output_path" not in spec.model_fields_set:
        overrides["output_path"] = settings.output_dir / (spec.name or spec.protocol.value)
    return spec.with_overrides(**overrides)


def run(args: argparse.Namespace, settings: Settings) -> int:
    spec = resolve_spec(args, settings)
    report = run_experiment(spec, workers=args.workers or settings.workers)
    print(format_summary_table(report), end="")
    for path in report.paths:
        print(path)
    return 0

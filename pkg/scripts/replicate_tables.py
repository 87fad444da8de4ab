from __future__ import annotations

import argparse
import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if PROJECT_ROOT.as_posix() not in sys.path:
    sys.path.insert(0, PROJECT_ROOT.as_posix())

from netfactor.config import get_settings
from netfactor.experiments import ExperimentStore
from netfactor.logging_config import configure_logging
from netfactor.services.experiments_service import format_summary_table, run_experiment


def main() -> int:
    settings = get_settings()
    configure_logging(settings.log_level)

    parser = argparse.ArgumentParser(description="Run every bundled experiment config.")
    parser.add_argument("--trials", type=int, help="Override trials for every config.")
    parser.add_argument("--out", type=Path, default=settings.output_dir)
    parser.add_argument("--workers", type=int, default=settings.workers)
    parser.add_argument("names", nargs="*", help="Subset of configs to run (default: all).")
    args = parser.parse_args()

    store = ExperimentStore(settings.experiments_dir)
    store.reload()
    for name in args.names or store.list():
        spec = store.get(name).with_overrides(trials=args.trials, output_path=args.out / name)
        report = run_experiment(spec, workers=args.workers)
        print(format_summary_table(report))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

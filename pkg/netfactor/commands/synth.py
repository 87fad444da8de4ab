from __future__ import annotations

import argparse
import logging
from pathlib import Path

from netfactor.config import Settings
from netfactor.matrix_io import save_labels, save_matrix
from netfactor.services.synth_service import (
    generate_planted_corpus,
    generate_planted_ratings,
    generate_synthetic_pair,
    holdout_entries,
)

logger = logging.getLogger(__name__)

KINDS = ("pair", "corpus", "ratings")


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("synth", help="Generate a synthetic instance.")
    parser.add_argument("--kind", choices=KINDS, default="pair")
    parser.add_argument("--n", type=int, help="Rows of V / nodes of H (corpus default 200).")
    parser.add_argument("--p", type=int, help="Columns of V (corpus default 150).")
    parser.add_argument("--density", type=float, default=1.0, help="Edge probability of a random pair's H.")
    parser.add_argument("--clusters", type=int, default=5, help="Planted topics (corpus) or rank (ratings).")
    parser.add_argument("--n-test", dest="n_test", type=int, default=100, help="Held-out entries (ratings).")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, settings: Settings) -> int:
    out: Path = args.out or settings.output_dir
    out.mkdir(parents=True, exist_ok=True)

    if args.kind == "corpus":
        corpus = generate_planted_corpus(args.n or 200, args.p or 150, args.clusters, args.seed)
        written = [
            save_matrix(corpus.v, out / "V.mtx"),
            save_matrix(corpus.h.weights, out / "H.mtx"),
            save_labels(corpus.labels, out / "labels.txt"),
        ]
    elif args.kind == "ratings":
        data = generate_planted_ratings(args.n or 100, args.p or 100, args.clusters, args.seed)
        held = holdout_entries(data.v, args.n_test, args.seed)
        test = data.v * 0.0
        test[held.rows, held.cols] = held.values
        written = [
            save_matrix(held.train, out / "V.mtx"),
            save_matrix(data.users.weights, out / "H.mtx"),
            save_matrix(data.items.weights, out / "H2.mtx"),
            save_matrix(test, out / "test.mtx"),
        ]
    else:
        v, h = generate_synthetic_pair(args.n or 10, args.p or 10, args.density, args.seed)
        written = [save_matrix(v, out / "V.mtx"), save_matrix(h.weights, out / "H.mtx")]

    logger.info("Synthetic %s instance (seed=%s) written to %s", args.kind, args.seed, out)
    for path in written:
        print(path)
    return 0

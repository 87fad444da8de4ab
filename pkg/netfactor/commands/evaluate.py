from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from netfactor.config import Settings
from netfactor.errors import DimensionError, InputError
from netfactor.evaluation import (
    cluster_scores,
    kmeans,
    mae,
    pearson,
    predict_entries,
    random_label_baseline,
    reconstruction_error,
    structure_scores,
)
from netfactor.matrix_io import load_labels, load_matrix, load_network

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval", help="Score factor files against truth files; prints JSON.")
    parser.add_argument("--a", type=Path, required=True, help="Factor A (coordinate file).")
    parser.add_argument("--x", type=Path, help="Factor X (coordinate file).")
    parser.add_argument("--h", type=Path, help="Horizontal network the rows of A should preserve.")
    parser.add_argument("--labels", type=Path, help="True labels of the rows of A, one integer per line.")
    parser.add_argument("--clusters", type=int, help="k-means / community clusters (default: from labels, else k).")
    parser.add_argument("--v", type=Path, help="V for the reconstruction error (needs --x).")
    parser.add_argument("--test", type=Path, help="Held-out entries as a coordinate file (needs --x).")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--restarts", type=int, default=10, help="k-means restarts.")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, settings: Settings) -> int:
    a = load_matrix(args.a)
    x = load_matrix(args.x) if args.x is not None else None
    if (args.v is not None or args.test is not None) and x is None:
        raise InputError("--v and --test need --x")

    metrics: dict[str, Any] = {"n": a.shape[0], "k": a.shape[1]}

    if args.labels is not None:
        truth = load_labels(args.labels)
        if truth.size != a.shape[0]:
            raise DimensionError(f"{args.labels} has {truth.size} labels but A has {a.shape[0]} rows")
        clusters = args.clusters or int(np.unique(truth).size)
        pred = kmeans(a, clusters, seed=args.seed, restarts=args.restarts)
        metrics["clustering"] = cluster_scores(truth, pred).as_dict()
        metrics["clustering_random"] = random_label_baseline(truth, pred, trials=100, seed=args.seed).as_dict()

    if args.h is not None:
        h = load_network(args.h)
        if h.size != a.shape[0]:
            raise DimensionError(f"{args.h} has {h.size} nodes but A has {a.shape[0]} rows")
        report = structure_scores(h, a, clusters=args.clusters, seed=args.seed, restarts=args.restarts)
        metrics.update(report.as_dict())

    if args.v is not None:
        assert x is not None
        metrics["reconstruction_error"] = reconstruction_error(load_matrix(args.v), a, x)

    if args.test is not None:
        assert x is not None
        test = load_matrix(args.test)
        if test.shape != (a.shape[0], x.shape[1]):
            raise DimensionError(f"{args.test} is {test.shape[0]}x{test.shape[1]} but AX is {a.shape[0]}x{x.shape[1]}")
        rows, cols = np.nonzero(test)
        pred = predict_entries(a, x, rows, cols)
        metrics["mae"] = mae(pred, test[rows, cols])
        metrics["correlation"] = pearson(pred, test[rows, cols])

    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0

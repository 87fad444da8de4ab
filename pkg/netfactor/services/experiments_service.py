"""
Experiment protocols and report assembly.

Trials are isolated: trial i draws its data and solver seed from cfg.seed + i, so
serial and concurrent runs produce the same rows. Rows are assembled in trial
order, then variant order, then metric order.
"""

from __future__ import annotations

import asyncio
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from netfactor.evaluation import (
    cluster_scores,
    degree_correlation,
    kmeans,
    mae,
    network_communities,
    pearson,
    predict_entries,
    random_label_baseline,
    reconstructed_network,
)
from netfactor.factor import factorize
from netfactor.matrix_io import save_trace
from netfactor.models import ExperimentSpec, FactorConfig, Protocol, Variant
from netfactor.netstruct import max_spanning_tree, tree_overlap
from netfactor.services.synth_service import (
    generate_planted_corpus,
    generate_planted_ratings,
    generate_synthetic_pair,
    holdout_entries,
)

logger = logging.getLogger(__name__)

# Report label for the chance-level rows of the clustering protocol.
RANDOM_BASELINE = "random"


@dataclass(frozen=True)
class TrialRow:
    trial: int
    variant: str
    metric: str
    value: float


@dataclass(frozen=True)
class SummaryRow:
    variant: str
    metric: str
    mean: float
    std: float
    count: int


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    rows: list[TrialRow]
    summary: list[SummaryRow]
    paths: list[Path] = field(default_factory=list)

    def cell(self, variant: Variant | str, metric: str) -> SummaryRow:
        name = variant.value if isinstance(variant, Variant) else variant
        for row in self.summary:
            if row.variant == name and row.metric == metric:
                return row
        raise KeyError(f"No summary cell for {name}/{metric}")


TrialFn = Callable[[ExperimentSpec, int], list[TrialRow]]


def _trial_cfg(spec: ExperimentSpec, index: int) -> FactorConfig:
    return spec.cfg.model_copy(update={"seed": spec.cfg.seed + index})


def _rows(index: int, variant: Variant | str, metrics: dict[str, float]) -> list[TrialRow]:
    name = variant.value if isinstance(variant, Variant) else variant
    return [TrialRow(trial=index, variant=name, metric=k, value=float(v)) for k, v in metrics.items()]


# ---------------------------------------------------------------------------
# Protocols (one trial each)
# ---------------------------------------------------------------------------


def convergence_ks(spec: ExperimentSpec) -> list[int]:
    cap = min(spec.n, spec.p)
    out: list[int] = []
    for k in spec.convergence_ks:
        k = min(k, cap)
        if k not in out:
            out.append(k)
    return out


def _convergence_trial(spec: ExperimentSpec, index: int) -> list[TrialRow]:
    cfg = _trial_cfg(spec, index)
    v, h = generate_synthetic_pair(spec.n, spec.p, spec.density, cfg.seed)
    traces_dir = spec.output_path / "convergence_traces"
    rows: list[TrialRow] = []
    for variant in spec.variants:
        for k in convergence_ks(spec):
            result = factorize(v, h, None, variant, cfg.model_copy(update={"k": k}))
            save_trace(result.trace, traces_dir / f"{variant.value}_k{k}_trial{index}.csv")
            rows += _rows(index, variant, {f"final_cost_k{k}": result.final_cost, f"iterations_k{k}": result.iterations})
    return rows


def _degree_trial(spec: ExperimentSpec, index: int) -> list[TrialRow]:
    cfg = _trial_cfg(spec, index)
    v, h = generate_synthetic_pair(spec.n, spec.p, spec.density, cfg.seed)
    rows: list[TrialRow] = []
    for variant in spec.variants:
        result = factorize(v, h, None, variant, cfg)
        rows += _rows(index, variant, {"degree_correlation": degree_correlation(h, result.a)})
    return rows


def _tree_trial(spec: ExperimentSpec, index: int) -> list[TrialRow]:
    cfg = _trial_cfg(spec, index)
    v, h = generate_synthetic_pair(spec.n, spec.p, spec.density, cfg.seed)
    tree = max_spanning_tree(h)
    rows: list[TrialRow] = []
    for variant in spec.variants:
        result = factorize(v, h, None, variant, cfg)
        overlap = tree_overlap(tree, max_spanning_tree(reconstructed_network(result.a)))
        rows += _rows(index, variant, {"tree_overlap": overlap})
    return rows


def _community_trial(spec: ExperimentSpec, index: int) -> list[TrialRow]:
    cfg = _trial_cfg(spec, index)
    v, h = generate_synthetic_pair(spec.n, spec.p, spec.density, cfg.seed)
    truth = network_communities(h, spec.k, seed=cfg.seed, restarts=spec.kmeans_restarts)
    rows: list[TrialRow] = []
    for variant in spec.variants:
        result = factorize(v, h, None, variant, cfg)
        found = kmeans(result.a, spec.k, seed=cfg.seed, restarts=spec.kmeans_restarts)
        rows += _rows(index, variant, cluster_scores(truth, found).as_dict())
    return rows


def _clustering_trial(spec: ExperimentSpec, index: int) -> list[TrialRow]:
    cfg = _trial_cfg(spec, index)
    corpus = generate_planted_corpus(spec.n, spec.p, spec.clusters, cfg.seed)
    rows: list[TrialRow] = []
    last: np.ndarray | None = None
    for variant in spec.variants:
        result = factorize(corpus.v, corpus.h, None, variant, cfg)
        labels = kmeans(result.a, spec.clusters, seed=cfg.seed, restarts=spec.kmeans_restarts)
        rows += _rows(index, variant, cluster_scores(corpus.labels, labels).as_dict())
        last = labels
    assert last is not None
    baseline = random_label_baseline(corpus.labels, last, trials=100, seed=cfg.seed)
    rows += _rows(index, RANDOM_BASELINE, baseline.as_dict())
    return rows


def _recommendation_trial(spec: ExperimentSpec, index: int) -> list[TrialRow]:
    cfg = _trial_cfg(spec, index)
    data = generate_planted_ratings(spec.n, spec.p, spec.k, cfg.seed)
    held = holdout_entries(data.v, spec.n_test, cfg.seed)
    rows: list[TrialRow] = []
    for variant in spec.variants:
        result = factorize(held.train, data.users, data.items, variant, cfg)
        pred = predict_entries(result.a, result.x, held.rows, held.cols)
        rows += _rows(index, variant, {"mae": mae(pred, held.values), "correlation": pearson(pred, held.values)})
    return rows


PROTOCOLS: dict[Protocol, TrialFn] = {
    Protocol.convergence: _convergence_trial,
    Protocol.degree: _degree_trial,
    Protocol.tree: _tree_trial,
    Protocol.community: _community_trial,
    Protocol.clustering: _clustering_trial,
    Protocol.recommendation: _recommendation_trial,
}


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def run_trial(spec: ExperimentSpec, index: int) -> list[TrialRow]:
    try:
        return PROTOCOLS[spec.protocol](spec, index)
    except Exception:
        logger.exception("Trial %s of %s failed", index, spec.name or spec.protocol.value)
        raise


async def _run_trials(spec: ExperimentSpec, workers: int) -> list[list[TrialRow]]:
    sem = asyncio.Semaphore(max(1, workers))

    async def one(index: int) -> list[TrialRow]:
        async with sem:
            rows = await asyncio.to_thread(run_trial, spec, index)
        logger.debug("Trial %s/%s done", index + 1, spec.trials)
        return rows

    return await asyncio.gather(*(one(i) for i in range(spec.trials)))


def summarize(rows: list[TrialRow]) -> list[SummaryRow]:
    """Mean and population standard deviation per (variant, metric), first-seen order."""

    groups: dict[tuple[str, str], list[float]] = {}
    for row in rows:
        groups.setdefault((row.variant, row.metric), []).append(row.value)
    out: list[SummaryRow] = []
    for (variant, metric), values in groups.items():
        arr = np.asarray(values, dtype=np.float64)
        out.append(SummaryRow(variant=variant, metric=metric, mean=float(np.mean(arr)), std=float(np.std(arr)), count=arr.size))
    return out


def run_experiment(spec: ExperimentSpec, *, workers: int = 1) -> ExperimentReport:
    """Run every trial of the experiment's protocol and write the report files."""

    spec.output_path.mkdir(parents=True, exist_ok=True)
    logger.info(
        "Experiment %s: protocol=%s n=%s p=%s k=%s trials=%s variants=%s workers=%s",
        spec.name or "-",
        spec.protocol.value,
        spec.n,
        spec.p,
        spec.k,
        spec.trials,
        ",".join(v.value for v in spec.variants),
        workers,
    )
    per_trial = asyncio.run(_run_trials(spec, workers))
    rows = [row for trial_rows in per_trial for row in trial_rows]
    report = ExperimentReport(spec=spec, rows=rows, summary=summarize(rows))
    report.paths = write_report(report)
    logger.info("Experiment %s finished; reports: %s", spec.name or "-", ", ".join(str(p) for p in report.paths))
    return report


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_report(report: ExperimentReport) -> list[Path]:
    out = report.spec.output_path
    stem = report.spec.protocol.value
    out.mkdir(parents=True, exist_ok=True)

    trials_path = out / f"{stem}_trials.csv"
    with trials_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial", "variant", "metric", "value"])
        for row in report.rows:
            writer.writerow([row.trial, row.variant, row.metric, _fmt(row.value)])

    summary_path = out / f"{stem}_summary.csv"
    with summary_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variant", "metric", "mean", "std", "count"])
        for s in report.summary:
            writer.writerow([s.variant, s.metric, _fmt(s.mean), _fmt(s.std), s.count])

    text_path = out / f"{stem}_summary.txt"
    text_path.write_text(format_summary_table(report), encoding="utf-8")
    return [trials_path, summary_path, text_path]


def format_summary_table(report: ExperimentReport) -> str:
    """Variants as rows, metrics as columns, cells "mean ± std"."""

    variants: list[str] = []
    metrics: list[str] = []
    cells: dict[tuple[str, str], str] = {}
    for s in report.summary:
        if s.variant not in variants:
            variants.append(s.variant)
        if s.metric not in metrics:
            metrics.append(s.metric)
        cells[(s.variant, s.metric)] = f"{s.mean:.4f} ± {s.std:.4f}"

    spec = report.spec
    header = ["variant", *metrics]
    body = [[v.upper(), *(cells.get((v, m), "-") for m in metrics)] for v in variants]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = [
        f"{spec.name or spec.protocol.value}: protocol={spec.protocol.value} n={spec.n} p={spec.p} "
        f"k={spec.k} alpha={spec.cfg.alpha} trials={spec.trials}",
        "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
    ]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in body]
    return "\n".join(lines) + "\n"

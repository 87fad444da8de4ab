"""
Evaluation: pair-counting clustering metrics, k-means, prediction metrics and
structure-preservation scores.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from netfactor.errors import DimensionError, InputError
from netfactor.factor import FactorResult
from netfactor.matcore import as_matrix, as_vector, row_sums
from netfactor.models import PairCounts
from netfactor.netstruct import HorizontalNetwork, community_basis, degree_sequence, max_spanning_tree, tree_overlap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterScores:
    jc: float
    fm: float
    f1: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class StructureReport:
    community: ClusterScores
    degree_correlation: float
    tree_overlap: int
    tree_max: int

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


# ---------------------------------------------------------------------------
# Pair counting
# ---------------------------------------------------------------------------


def _pairs(counts: np.ndarray) -> int:
    counts = counts.astype(np.int64)
    return int((counts * (counts - 1) // 2).sum())


def pair_counts(truth: object, pred: object) -> PairCounts:
    """a, b, c over all unordered point pairs, from the contingency table."""

    t = np.asarray(truth).ravel()
    p = np.asarray(pred).ravel()
    if t.shape != p.shape:
        raise DimensionError(f"pair_counts: label vectors differ in length ({t.size} vs {p.size})")

    _, t_idx = np.unique(t, return_inverse=True)
    _, p_idx = np.unique(p, return_inverse=True)
    n_pred = int(p_idx.max()) + 1 if p_idx.size else 0
    joint = np.bincount(t_idx * n_pred + p_idx) if t_idx.size else np.zeros(0, dtype=np.int64)

    same_both = _pairs(joint)
    same_truth = _pairs(np.bincount(t_idx)) if t_idx.size else 0
    same_pred = _pairs(np.bincount(p_idx)) if p_idx.size else 0
    return PairCounts(a=same_both, b=same_truth - same_both, c=same_pred - same_both)


def jaccard(pc: PairCounts) -> float:
    denom = pc.a + pc.b + pc.c
    return pc.a / denom if denom else 0.0


def folkes_mallows(pc: PairCounts) -> float:
    if pc.a == 0:
        return 0.0
    return float(np.sqrt((pc.a / (pc.a + pc.b)) * (pc.a / (pc.a + pc.c))))


def f1(pc: PairCounts) -> float:
    denom = 2 * pc.a * pc.a + pc.a * pc.c + pc.a * pc.b
    return 2 * pc.a * pc.a / denom if denom else 0.0


def cluster_scores(truth: object, pred: object) -> ClusterScores:
    pc = pair_counts(truth, pred)
    return ClusterScores(jc=jaccard(pc), fm=folkes_mallows(pc), f1=f1(pc))


def random_label_baseline(truth: object, pred: object, *, trials: int = 100, seed: int = 0) -> ClusterScores:
    """Mean scores of `pred` randomly permuted against `truth` (chance level)."""

    rng = np.random.default_rng(seed)
    p = np.asarray(pred).ravel()
    scores = [cluster_scores(truth, rng.permutation(p)) for _ in range(trials)]
    return ClusterScores(
        jc=float(np.mean([s.jc for s in scores])),
        fm=float(np.mean([s.fm for s in scores])),
        f1=float(np.mean([s.f1 for s in scores])),
    )


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


def wcss(points: object, labels: object) -> float:
    x = as_matrix(points, name="points")
    lab = np.asarray(labels).ravel()
    total = 0.0
    for c in np.unique(lab):
        members = x[lab == c]
        total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def _farthest_point_centers(x: np.ndarray, clusters: int, first: int) -> np.ndarray:
    chosen = [first]
    dist = ((x - x[first]) ** 2).sum(axis=1)
    for _ in range(1, clusters):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, ((x - x[nxt]) ** 2).sum(axis=1))
    return x[chosen].copy()


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int) -> tuple[np.ndarray, list[float]]:
    labels = np.full(x.shape[0], -1)
    history: list[float] = []
    for _ in range(max_iter):
        dist = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(dist, axis=1)
        history.append(float(dist[np.arange(x.shape[0]), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(centers.shape[0]):
            members = labels == j
            # An emptied cluster keeps its previous center.
            if np.any(members):
                centers[j] = x[members].mean(axis=0)
    return labels, history


def kmeans(
    points: object,
    clusters: int,
    *,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
    return_history: bool = False,
) -> np.ndarray | tuple[np.ndarray, list[float]]:
    """
    Lloyd's algorithm from greedy farthest-point seeds; the first seed of each
    restart is drawn from the seeded generator. Returns the labels of the restart
    with the lowest within-cluster sum of squares (and its per-iteration WCSS).
    """

    x = as_matrix(points, name="points")
    n = x.shape[0]
    if not 1 <= clusters <= n:
        raise DimensionError(f"kmeans: clusters={clusters} must be within [1, {n}]")

    rng = np.random.default_rng(seed)
    best: tuple[float, np.ndarray, list[float]] | None = None
    for _ in range(max(1, restarts)):
        centers = _farthest_point_centers(x, clusters, int(rng.integers(n)))
        labels, history = _lloyd(x, centers, max_iter)
        score = wcss(x, labels)
        if best is None or score < best[0]:
            best = (score, labels, history)

    assert best is not None
    if return_history:
        return best[1], best[2]
    return best[1]


# ---------------------------------------------------------------------------
# Prediction metrics
# ---------------------------------------------------------------------------


def mae(pred: object, actual: object) -> float:
    p = as_vector(pred, name="pred")
    r = as_vector(actual, name="actual")
    if p.shape != r.shape:
        raise DimensionError(f"mae: lengths differ ({p.size} vs {r.size})")
    if p.size == 0:
        raise InputError("mae: empty input")
    return float(np.mean(np.abs(p - r)))


def pearson(x: object, y: object) -> float:
    """Two-pass correlation coefficient; 0 when either side has no variance."""

    a = as_vector(x, name="x")
    b = as_vector(y, name="y")
    if a.shape != b.shape:
        raise DimensionError(f"pearson: lengths differ ({a.size} vs {b.size})")
    if a.size < 2:
        return 0.0
    da = a - a.mean()
    db = b - b.mean()
    sa = float(np.dot(da, da))
    sb = float(np.dot(db, db))
    if sa == 0.0 or sb == 0.0:
        return 0.0
    rho = float(np.dot(da, db)) / float(np.sqrt(sa * sb))
    return min(1.0, max(-1.0, rho))


def reconstruction_error(v: object, a: object, x: object) -> float:
    """½‖V − AX‖² / ‖V‖²."""

    vm = as_matrix(v, name="V")
    resid = vm - as_matrix(a, name="A") @ as_matrix(x, name="X")
    norm = float((vm**2).sum())
    return 0.5 * float((resid**2).sum()) / norm if norm else 0.0


def predict_entries(a: object, x: object, rows: object, cols: object) -> np.ndarray:
    """r̂ = (AX)[rows, cols] without forming AX."""

    am = as_matrix(a, name="A")
    xm = as_matrix(x, name="X")
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    return np.einsum("ij,ji->i", am[r], xm[:, c])


# ---------------------------------------------------------------------------
# Structure preservation
# ---------------------------------------------------------------------------


def reconstructed_network(a: object) -> HorizontalNetwork:
    am = as_matrix(a, name="A")
    s = am @ am.T
    return HorizontalNetwork.from_matrix(s, symmetrize=True)


def degree_correlation(h: HorizontalNetwork, a: object) -> float:
    am = as_matrix(a, name="A")
    if am.shape[0] != h.size:
        raise DimensionError(f"A has {am.shape[0]} rows but H has {h.size} nodes")
    return pearson(degree_sequence(h), row_sums(am @ am.T))


def network_communities(h: HorizontalNetwork, clusters: int, *, seed: int = 0, restarts: int = 10) -> np.ndarray:
    """Spectral communities: k-means on the rows of the `clusters` smallest Laplacian eigenvectors."""

    return kmeans(community_basis(h, clusters).basis, clusters, seed=seed, restarts=restarts)


def structure_scores(
    h: HorizontalNetwork,
    result: FactorResult | np.ndarray,
    *,
    clusters: int | None = None,
    seed: int = 0,
    restarts: int = 10,
) -> StructureReport:
    """
    Compare Ĥ = AAᵀ (diagonal dropped) with H. `result` is a FactorResult or A
    itself. Communities of Ĥ are k-means on the rows of A (A is itself a symmetric
    factor of Ĥ); communities of H are its spectral communities.
    """

    a = as_matrix(result.a if isinstance(result, FactorResult) else result, name="A")
    if a.shape[0] != h.size:
        raise DimensionError(f"A has {a.shape[0]} rows but H has {h.size} nodes")
    clusters = min(clusters or a.shape[1], h.size)

    h_hat = reconstructed_network(a)
    truth = network_communities(h, clusters, seed=seed, restarts=restarts)
    found = kmeans(a, clusters, seed=seed, restarts=restarts)

    report = StructureReport(
        community=cluster_scores(truth, found),
        degree_correlation=degree_correlation(h, a),
        tree_overlap=tree_overlap(max_spanning_tree(h), max_spanning_tree(h_hat)),
        tree_max=h.size - 1,
    )
    logger.debug("structure_scores: %s", report)
    return report

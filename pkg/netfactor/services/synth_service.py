from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from netfactor.errors import DimensionError, InputError
from netfactor.matcore import as_matrix
from netfactor.netstruct import HorizontalNetwork, cosine_similarity_network

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlantedCorpus:
    v: np.ndarray
    h: HorizontalNetwork
    labels: np.ndarray


@dataclass(frozen=True)
class PlantedRatings:
    v: np.ndarray
    users: HorizontalNetwork
    items: HorizontalNetwork


@dataclass(frozen=True)
class Holdout:
    train: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray


def _check_density(density: float) -> None:
    if not 0.0 < density <= 1.0:
        raise InputError(f"density must be in (0, 1], got {density}")


def _random_network(rng: np.random.Generator, n: int, density: float) -> HorizontalNetwork:
    iu = np.triu_indices(n, k=1)
    present = rng.random(iu[0].size) < density
    # (0, 1] so a present edge never has zero weight.
    weights = 1.0 - rng.random(iu[0].size)
    w = np.zeros((n, n), dtype=np.float64)
    w[iu] = np.where(present, weights, 0.0)
    return HorizontalNetwork(w + w.T)


def generate_synthetic_pair(n: int, p: int, density: float = 1.0, seed: int = 0) -> tuple[np.ndarray, HorizontalNetwork]:
    """V with uniform(0, 1) entries and a random symmetric H; deterministic per seed."""

    if n < 1 or p < 1:
        raise DimensionError(f"synthetic pair needs n, p >= 1, got n={n} p={p}")
    _check_density(density)
    rng = np.random.default_rng(seed)
    v = rng.random((n, p))
    h = _random_network(rng, n, density)
    return v, h


def generate_planted_corpus(
    n_docs: int = 200,
    n_words: int = 150,
    clusters: int = 5,
    seed: int = 0,
    *,
    noise: float = 0.1,
    p_in: float = 0.1,
    p_out: float = 0.005,
) -> PlantedCorpus:
    """
    Documents x words counts with one planted topic per document, and a citation
    network whose links fall mostly inside a topic.
    """

    if not 1 <= clusters <= min(n_docs, n_words):
        raise DimensionError(f"clusters={clusters} must be within [1, min(n_docs, n_words)]")
    rng = np.random.default_rng(seed)

    labels = rng.permutation(np.arange(n_docs) % clusters)
    topic_of_word = np.arange(n_words) % clusters
    on_topic = labels[:, None] == topic_of_word[None, :]
    v = noise * rng.random((n_docs, n_words))
    v = v + np.where(on_topic, rng.random((n_docs, n_words)), 0.0)

    iu = np.triu_indices(n_docs, k=1)
    same = labels[iu[0]] == labels[iu[1]]
    linked = rng.random(iu[0].size) < np.where(same, p_in, p_out)
    w = np.zeros((n_docs, n_docs), dtype=np.float64)
    w[iu] = linked.astype(np.float64)
    h = HorizontalNetwork(w + w.T)

    logger.debug("Planted corpus: %sx%s, %s clusters, %s links", n_docs, n_words, clusters, int(linked.sum()))
    return PlantedCorpus(v=v, h=h, labels=labels.astype(np.int64))


def generate_planted_ratings(n: int, p: int, rank: int, seed: int = 0, *, threshold: float = 0.9) -> PlantedRatings:
    """
    Low-rank user x item ratings V = A*X* with user and item networks built from
    the cosine similarity of the planted factors.
    """

    if not 1 <= rank <= min(n, p):
        raise DimensionError(f"rank={rank} must be within [1, min(n, p)]")
    rng = np.random.default_rng(seed)
    a = rng.random((n, rank))
    x = rng.random((rank, p))
    return PlantedRatings(
        v=a @ x,
        users=cosine_similarity_network(a, threshold=threshold),
        items=cosine_similarity_network(x.T, threshold=threshold),
    )


def holdout_entries(v: object, n_test: int, seed: int = 0) -> Holdout:
    """Hide `n_test` positive entries of V (zeroed in the training copy)."""

    vm = as_matrix(v, name="V")
    rows, cols = np.nonzero(vm > 0.0)
    if n_test < 1 or n_test > rows.size:
        raise InputError(f"cannot hold out {n_test} entries from {rows.size} positive entries")
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(rows.size, size=n_test, replace=False))
    r, c = rows[pick], cols[pick]
    train = vm.copy()
    train[r, c] = 0.0
    return Holdout(train=train, rows=r, cols=c, values=vm[r, c].copy())

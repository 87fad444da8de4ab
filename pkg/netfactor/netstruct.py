"""
Graph-structural derivations from a horizontal network: Laplacian eigenbasis,
maximum spanning tree masks, degree sequences.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import linalg

from netfactor.errors import DimensionError, InputError, SolverError
from netfactor.matcore import as_matrix, hadamard, row_sums

logger = logging.getLogger(__name__)

_EIGEN_RESIDUAL_TOL = 1e-8
# Fraction of the limit above which an accepted residual is still logged.
_EIGEN_RESIDUAL_WARN = 0.1


@dataclass(frozen=True)
class HorizontalNetwork:
    """
    Undirected weighted network on n nodes of the same character.

    Weights must be symmetric, nonnegative, with a zero diagonal. Asymmetric input
    is rejected unless the caller asks for symmetrization explicitly.
    """

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = as_matrix(self.weights, name="horizontal network")
        if w.shape[0] != w.shape[1]:
            raise DimensionError(f"horizontal network must be square, got {w.shape[0]}x{w.shape[1]}")
        if w.size and float(w.min()) < 0.0:
            raise InputError("horizontal network has negative weights")
        if np.any(np.diag(w) != 0.0):
            raise InputError("horizontal network must have a zero diagonal")
        if not np.array_equal(w, w.T):
            raise InputError("horizontal network must be symmetric")
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @classmethod
    def from_matrix(cls, m: object, *, symmetrize: bool = False) -> "HorizontalNetwork":
        w = np.array(as_matrix(m, name="horizontal network"), copy=True)
        if symmetrize:
            if w.shape[0] != w.shape[1]:
                raise DimensionError(f"horizontal network must be square, got {w.shape[0]}x{w.shape[1]}")
            w = (w + w.T) / 2.0
            np.fill_diagonal(w, 0.0)
        return cls(w)

    def edges(self) -> list[tuple[int, int, float]]:
        """Upper-triangle edges (i < j, weight > 0) in row-major order."""

        rows, cols = np.nonzero(np.triu(self.weights, k=1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(rows, cols)]


@dataclass(frozen=True)
class TreeMask:
    """
    Edge indicators of a maximum spanning forest (mask) and of every other
    off-diagonal position (complement). Both are symmetric 0/1 float matrices.
    """

    mask: np.ndarray
    complement: np.ndarray
    components: int = 1

    @property
    def size(self) -> int:
        return int(self.mask.shape[0])

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.mask, k=1).sum())

    def edge_list(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.mask, k=1))
        return [(int(i), int(j)) for i, j in zip(rows, cols)]


@dataclass(frozen=True)
class CommunityBasis:
    """The k Laplacian eigenpairs with the smallest eigenvalues, ascending."""

    basis: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return int(self.basis.shape[1])


class UnionFind:
    def __init__(self, num: int):
        self.parents = list(range(num))
        self.rank = [0] * num

    def find(self, x: int) -> int:
        root = x
        while self.parents[root] != root:
            root = self.parents[root]
        # path compression
        while self.parents[x] != root:
            self.parents[x], x = root, self.parents[x]
        return root

    def union(self, x: int, y: int) -> bool:
        x = self.find(x)
        y = self.find(y)
        if x == y:
            return False
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        self.parents[y] = x
        if self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        return True


def laplacian(h: HorizontalNetwork) -> np.ndarray:
    """L = D - H with D the diagonal degree matrix."""

    return np.diag(row_sums(h.weights)) - h.weights


def degree_sequence(h: HorizontalNetwork) -> np.ndarray:
    return row_sums(h.weights)


def community_basis(h: HorizontalNetwork, k: int) -> CommunityBasis:
    """
    Eigenvectors of L for its k smallest eigenvalues. Each column is sign-fixed so
    its largest-magnitude entry is positive; no nonnegativity projection is applied.
    """

    n = h.size
    if not 1 <= k <= n:
        raise DimensionError(f"community_basis: k={k} must be within [1, {n}]")

    lap = laplacian(h)
    try:
        values, vectors = linalg.eigh(lap, subset_by_index=[0, k - 1])
    except linalg.LinAlgError as e:
        raise SolverError(f"Laplacian eigendecomposition failed for n={n}, k={k}") from e

    for col in range(k):
        v = vectors[:, col]
        if v[int(np.argmax(np.abs(v)))] < 0.0:
            vectors[:, col] = -v

    residual = float(np.max(np.linalg.norm(lap @ vectors - vectors * values, axis=0))) if k else 0.0
    scale = max(1.0, float(np.abs(lap).max()) if lap.size else 1.0)
    if residual > _EIGEN_RESIDUAL_TOL * scale:
        raise SolverError(f"Laplacian eigenpairs inaccurate: max residual {residual:.3e} (n={n}, k={k})")
    if residual > _EIGEN_RESIDUAL_WARN * _EIGEN_RESIDUAL_TOL * scale:
        logger.warning("Laplacian eigenpair residual %.3e is close to the limit (n=%s, k=%s)", residual, n, k)
    logger.debug("community_basis: n=%s k=%s eigenvalues=%s residual=%.2e", n, k, values, residual)

    return CommunityBasis(basis=vectors, eigenvalues=values)


def max_spanning_tree(h: HorizontalNetwork) -> TreeMask:
    """
    Kruskal with union-find over edges of positive weight. Heavier edges first;
    equal weights are taken in ascending (row, col) order. Disconnected input yields
    a maximum spanning forest.
    """

    n = h.size
    w = h.weights
    rows, cols = np.nonzero(np.triu(w, k=1))
    weights = w[rows, cols]
    # lexsort: last key is primary.
    order = np.lexsort((cols, rows, -weights))

    uf = UnionFind(n)
    mask = np.zeros((n, n), dtype=np.float64)
    taken = 0
    for idx in order:
        i, j = int(rows[idx]), int(cols[idx])
        if uf.union(i, j):
            mask[i, j] = mask[j, i] = 1.0
            taken += 1
            if taken == n - 1:
                break

    return tree_mask_from_matrix(mask, components=n - taken)


def tree_mask_from_edges(n: int, edges: Iterable[tuple[int, int]]) -> TreeMask:
    mask = np.zeros((n, n), dtype=np.float64)
    uf = UnionFind(n)
    taken = 0
    for i, j in edges:
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise InputError(f"invalid tree edge ({i}, {j}) for n={n}")
        if not uf.union(int(i), int(j)):
            raise InputError(f"tree edges contain a cycle at ({i}, {j})")
        mask[i, j] = mask[j, i] = 1.0
        taken += 1
    return tree_mask_from_matrix(mask, components=n - taken)


def tree_mask_from_matrix(mask: np.ndarray, *, components: int = 1) -> TreeMask:
    n = mask.shape[0]
    off_diagonal = np.ones((n, n), dtype=np.float64) - np.eye(n)
    return TreeMask(mask=mask, complement=off_diagonal - mask, components=int(components))


def tree_overlap(t1: TreeMask, t2: TreeMask) -> int:
    """Number of undirected edges shared by both masks."""

    if t1.size != t2.size:
        raise DimensionError(f"tree_overlap: mask sizes differ ({t1.size} vs {t2.size})")
    return int(np.triu(hadamard(t1.mask, t2.mask), k=1).sum())


def cosine_similarity_network(features: object, *, threshold: float = 0.0) -> HorizontalNetwork:
    """
    Network whose edge weights are cosine similarities between feature rows.
    Similarities below `threshold` (and all negative ones) are dropped.
    """

    f = as_matrix(features, name="features")
    norms = np.linalg.norm(f, axis=1)
    safe = np.where(norms > 0.0, norms, 1.0)
    unit = f / safe[:, None]
    sim = unit @ unit.T
    sim = (sim + sim.T) / 2.0
    sim[sim < max(float(threshold), 0.0)] = 0.0
    np.fill_diagonal(sim, 0.0)
    return HorizontalNetwork(sim)

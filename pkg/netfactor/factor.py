"""
Structure-preserving factorization V ≈ AX with A anchored to a horizontal network.

Every variant is a clipped-step gradient iteration. The gradient of each cost is
split as `denom - numer` with both parts entrywise nonnegative; the step size

    η̄ = Ā / ((√denom + √numer) · √denom + δ)

(numer/denom evaluated at the clipped factor Ā) turns A - η̄·∂J/∂A into the
square-root multiplicative update when no clipping fires. Steps are clamped to
[0, eta_cap], projected to [0, ∞) and accepted only if the cost stays finite and
does not rise.

The tree term fits the reconstruction to the mined tree,
¼(‖T ⊙ H − T ⊙ AAᵀ‖² + λ‖T̄ ⊙ AAᵀ‖²) with λ = |T| / |T̄| (pair counts).
The contrast gradient (T̄ − T) ⊙ AAᵀ·A has no lower bound on its
cost and is kept only as `tnmf_a_gradient` / `tnmf_multiplicative_update`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from netfactor.errors import DimensionError, InputError, shape_str
from netfactor.matcore import SplitPair, as_matrix, as_vector, pos_neg_split, require_nonnegative
from netfactor.models import DegreeGradient, FactorConfig, Termination, Variant
from netfactor.netstruct import HorizontalNetwork, TreeMask, community_basis, degree_sequence, max_spanning_tree

logger = logging.getLogger(__name__)

# Independent generator stream for the symmetric-NMF pre-solve.
_SYMNMF_STREAM = 1

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class StructureTarget:
    """
    Per-variant precomputation on one horizontal network.

    whole:     anchor = P from the symmetric NMF of H (split into P⁺/P⁻)
    community: anchor = P_k, the k smallest Laplacian eigenvectors
    degree:    degrees = H·1
    tree:      tree = max spanning tree mask of H, tree_weights = T ⊙ H,
               off_tree_weight = λ
    """

    variant: Variant
    anchor: SplitPair | None = None
    degrees: np.ndarray | None = None
    tree: TreeMask | None = None
    tree_weights: np.ndarray | None = None
    off_tree_weight: float = 1.0

    @classmethod
    def from_anchor(cls, p: object, *, variant: Variant = Variant.whole) -> "StructureTarget":
        return cls(variant=variant, anchor=pos_neg_split(p))

    @classmethod
    def from_degrees(cls, deg: object) -> "StructureTarget":
        return cls(variant=Variant.degree, degrees=as_vector(deg, name="degree vector"))

    @classmethod
    def from_tree(cls, t: TreeMask, weights: object | None = None) -> "StructureTarget":
        """Tree target; without `weights` every tree edge is fitted to 1."""

        if weights is None:
            fitted = t.mask
        else:
            w = as_matrix(weights, name="tree weights")
            if w.shape != t.mask.shape:
                raise DimensionError(f"tree weights are {shape_str(w.shape)} but the mask is {t.size}x{t.size}")
            fitted = t.mask * w
        off_tree = float(t.complement.sum())
        lam = float(t.mask.sum()) / off_tree if off_tree else 0.0
        return cls(variant=Variant.tree, tree=t, tree_weights=fitted, off_tree_weight=lam)

    @property
    def size(self) -> int:
        if self.anchor is not None:
            return int(self.anchor.plus.shape[0])
        if self.degrees is not None:
            return int(self.degrees.shape[0])
        assert self.tree is not None
        return self.tree.size


@dataclass(frozen=True)
class FactorResult:
    a: np.ndarray
    x: np.ndarray
    trace: list[float] = field(repr=False)
    terminated: Termination
    variant: Variant = Variant.plain

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def final_cost(self) -> float:
        return self.trace[-1] if self.trace else float("nan")


# ---------------------------------------------------------------------------
# Structure terms on a node factor F (F = A, or F = Xᵀ for the second network)
# ---------------------------------------------------------------------------


def structure_cost(f: np.ndarray, target: StructureTarget) -> float:
    """Structure term without its α weight."""

    if target.anchor is not None:
        anchor = target.anchor.plus - target.anchor.minus
        return 0.5 * _sqnorm(anchor - f)
    if target.degrees is not None:
        recon = f @ f.sum(axis=0)
        diff = target.degrees - recon
        return 0.5 * float(np.dot(diff, diff))
    assert target.tree is not None and target.tree_weights is not None
    s = f @ f.T
    on_tree = target.tree_weights - target.tree.mask * s
    return 0.25 * (_sqnorm(on_tree) + target.off_tree_weight * _sqnorm(target.tree.complement * s))


def structure_split(
    f: np.ndarray,
    target: StructureTarget,
    *,
    degree_gradient: DegreeGradient = DegreeGradient.exact,
) -> tuple[np.ndarray, np.ndarray]:
    """(numer, denom) with ∂(structure term)/∂F = denom - numer, both ≥ 0."""

    if target.anchor is not None:
        return target.anchor.plus, f + target.anchor.minus

    if target.degrees is not None:
        d = target.degrees
        col = f.sum(axis=0)  # 1ᵀF
        recon = f @ col  # FFᵀ1
        if degree_gradient == DegreeGradient.scaled:
            return np.outer(d, col), 2.0 * np.outer(recon, col)
        ones = np.ones(f.shape[0])
        numer = np.outer(d, col) + np.outer(ones, f.T @ d)
        denom = np.outer(recon, col) + np.outer(ones, f.T @ recon)
        return numer, denom

    assert target.tree is not None and target.tree_weights is not None
    s = f @ f.T
    penalty = target.tree.mask * s + target.off_tree_weight * (target.tree.complement * s)
    return target.tree_weights @ f, penalty @ f


# ---------------------------------------------------------------------------
# Costs and gradients
# ---------------------------------------------------------------------------


def objective(
    v: np.ndarray,
    a: np.ndarray,
    x: np.ndarray,
    target: StructureTarget | None = None,
    alpha: float = 0.0,
    target2: StructureTarget | None = None,
    alpha2: float = 0.0,
) -> float:
    """½‖V − AX‖² + α·(term on A) + α2·(term on Xᵀ)."""

    cost = 0.5 * _sqnorm(v - a @ x)
    if target is not None:
        cost += alpha * structure_cost(a, target)
    if target2 is not None:
        cost += alpha2 * structure_cost(x.T, target2)
    return cost


def x_gradient(v: np.ndarray, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """∂(½‖V − AX‖²)/∂X = −AᵀV + AᵀAX."""

    return a.T @ a @ x - a.T @ v


def nnmf_a_gradient(v: object, p: object, a: object, x: object, alpha: float) -> np.ndarray:
    """A(XXᵀ + αI) − (VXᵀ + αP); also the community gradient with P = P_k."""

    v, p, a, x = _conform(v, a, x, p=p)
    k = a.shape[1]
    return a @ (x @ x.T + alpha * np.eye(k)) - (v @ x.T + alpha * p)


def dnmf_a_gradient(v: object, deg: object, a: object, x: object, alpha: float) -> np.ndarray:
    """
    Degree gradient in the scaled form −VXᵀ + AXXᵀ − α·H1·1ᵀA + 2α·AAᵀ1·1ᵀA, with the
    n×n ones products factored into outer products of vectors.
    """

    v, _, a, x = _conform(v, a, x)
    d = _degrees_for(deg, a)
    col = a.sum(axis=0)
    return -(v @ x.T) + a @ (x @ x.T) - alpha * np.outer(d, col) + 2.0 * alpha * np.outer(a @ col, col)


def dnmf_a_gradient_exact(v: object, deg: object, a: object, x: object, alpha: float) -> np.ndarray:
    """True gradient of ½‖V − AX‖² + ½α‖H1 − AAᵀ1‖²."""

    v, _, a, x = _conform(v, a, x)
    d = _degrees_for(deg, a)
    resid = a @ a.sum(axis=0) - d
    ones = np.ones(a.shape[0])
    structure = np.outer(resid, a.sum(axis=0)) + np.outer(ones, a.T @ resid)
    return a @ (x @ x.T) - v @ x.T + alpha * structure


def tnmf_a_gradient(v: object, t: TreeMask, a: object, x: object, alpha: float) -> np.ndarray:
    """(−VXᵀ + AXXᵀ) + α·((T̄ − T) ⊙ AAᵀ)A, the tree-contrast gradient."""

    v, _, a, x = _conform(v, a, x)
    _check_tree(t, a)
    s = a @ a.T
    return (-(v @ x.T) + a @ (x @ x.T)) + alpha * (((t.complement - t.mask) * s) @ a)


def tnmf_fit_gradient(
    v: object, t: TreeMask, a: object, x: object, alpha: float, *, weights: object | None = None
) -> np.ndarray:
    """
    Gradient the tree solver descends:
    (−VXᵀ + AXXᵀ) + α·((T ⊙ AAᵀ + λ·T̄ ⊙ AAᵀ)A − (T ⊙ H)A).
    """

    v, _, a, x = _conform(v, a, x)
    _check_tree(t, a)
    numer, denom = structure_split(a, StructureTarget.from_tree(t, weights))
    return (-(v @ x.T) + a @ (x @ x.T)) + alpha * (denom - numer)


# ---------------------------------------------------------------------------
# Step machinery
# ---------------------------------------------------------------------------


def clip_factor(m: np.ndarray, grad: np.ndarray, sigma: float) -> np.ndarray:
    """Ā: entries with a negative gradient are lifted to at least σ."""

    return np.where(grad < 0.0, np.maximum(m, sigma), m)


def clipped_step_size(a_bar: np.ndarray, numer: np.ndarray, denom: np.ndarray, delta: float) -> np.ndarray:
    root_den = np.sqrt(np.maximum(denom, 0.0))
    root_num = np.sqrt(np.maximum(numer, 0.0))
    return a_bar / ((root_den + root_num) * root_den + delta)


def _guarded_descent(
    current: np.ndarray,
    step: np.ndarray,
    cost: Objective,
    base: float,
    max_backtracks: int,
    *,
    label: str,
) -> tuple[np.ndarray, float]:
    for attempt in range(max_backtracks + 1):
        candidate = np.maximum(current - step, 0.0)
        value = cost(candidate)
        if np.isfinite(value) and value <= base and np.isfinite(candidate).all():
            if attempt:
                logger.debug("%s step accepted after %s halvings", label, attempt)
            return candidate, value
        step = step * 0.5
    logger.debug("%s step rejected after %s halvings; factor unchanged", label, max_backtracks)
    return current, base


def _a_step(
    v: np.ndarray,
    a: np.ndarray,
    x: np.ndarray,
    target: StructureTarget | None,
    alpha: float,
    cfg: FactorConfig,
    cost: Objective,
    base: float,
) -> tuple[np.ndarray, float]:
    vxt = v @ x.T
    xxt = x @ x.T
    numer, denom = vxt, a @ xxt
    if target is not None:
        s_num, s_den = structure_split(a, target, degree_gradient=cfg.degree_gradient)
        numer, denom = numer + alpha * s_num, denom + alpha * s_den
    grad = denom - numer

    a_bar = clip_factor(a, grad, cfg.sigma)
    numer_bar, denom_bar = vxt, a_bar @ xxt
    if target is not None:
        s_num, s_den = structure_split(a_bar, target, degree_gradient=cfg.degree_gradient)
        numer_bar, denom_bar = numer_bar + alpha * s_num, denom_bar + alpha * s_den

    eta = np.clip(clipped_step_size(a_bar, numer_bar, denom_bar, cfg.delta), 0.0, cfg.eta_cap)
    return _guarded_descent(a, eta * grad, cost, base, cfg.max_backtracks, label="A")


def _x_step(
    v: np.ndarray,
    a: np.ndarray,
    x: np.ndarray,
    target2: StructureTarget | None,
    alpha2: float,
    cfg: FactorConfig,
    cost: Objective,
    base: float,
) -> tuple[np.ndarray, float]:
    atv = a.T @ v
    ata = a.T @ a
    numer, denom = atv, ata @ x
    if target2 is not None:
        s_num, s_den = structure_split(x.T, target2, degree_gradient=cfg.degree_gradient)
        numer, denom = numer + alpha2 * s_num.T, denom + alpha2 * s_den.T
    grad = denom - numer

    x_bar = clip_factor(x, grad, cfg.sigma)
    numer_bar, denom_bar = atv, ata @ x_bar
    if target2 is not None:
        s_num, s_den = structure_split(x_bar.T, target2, degree_gradient=cfg.degree_gradient)
        numer_bar, denom_bar = numer_bar + alpha2 * s_num.T, denom_bar + alpha2 * s_den.T

    eta = np.clip(clipped_step_size(x_bar, numer_bar, denom_bar, cfg.delta), 0.0, cfg.eta_cap)
    return _guarded_descent(x, eta * grad, cost, base, cfg.max_backtracks, label="X")


def update_x_step(
    v: object,
    a: object,
    x: object,
    cfg: FactorConfig,
    target2: StructureTarget | None = None,
) -> np.ndarray:
    """One clipped gradient step on X (plus the second-network term when given)."""

    v, _, a, x = _conform(v, a, x)
    alpha2 = cfg.second_alpha

    def cost(xc: np.ndarray) -> float:
        return objective(v, a, xc, target2=target2, alpha2=alpha2)

    new_x, _ = _x_step(v, a, x, target2, alpha2, cfg, cost, cost(x))
    return new_x


def _public_a_step(v: object, a: object, x: object, target: StructureTarget, cfg: FactorConfig) -> np.ndarray:
    v, _, a, x = _conform(v, a, x)
    require_nonnegative(a, name="A")
    if target.size != a.shape[0]:
        raise DimensionError(f"structure target has {target.size} nodes but A has {a.shape[0]} rows")

    def cost(ac: np.ndarray) -> float:
        return objective(v, ac, x, target, cfg.alpha)

    new_a, _ = _a_step(v, a, x, target, cfg.alpha, cfg, cost, cost(a))
    return new_a


def nnmf_a_step(v: object, p: object, a: object, x: object, cfg: FactorConfig) -> np.ndarray:
    return _public_a_step(v, a, x, StructureTarget.from_anchor(p), cfg)


def dnmf_a_step(v: object, deg: object, a: object, x: object, cfg: FactorConfig) -> np.ndarray:
    return _public_a_step(v, a, x, StructureTarget.from_degrees(deg), cfg)


def tnmf_a_step(v: object, t: TreeMask, a: object, x: object, cfg: FactorConfig) -> np.ndarray:
    return _public_a_step(v, a, x, StructureTarget.from_tree(t), cfg)


# ---------------------------------------------------------------------------
# Closed-form multiplicative updates (cross-checks only; factorize never uses them)
# ---------------------------------------------------------------------------


def nnmf_multiplicative_update(v: object, p: object, a: object, x: object, alpha: float) -> np.ndarray:
    """A ⊙ √((VXᵀ + αP⁺) / (AXXᵀ + αA + αP⁻))."""

    v, p, a, x = _conform(v, a, x, p=p)
    split = pos_neg_split(p)
    numer = v @ x.T + alpha * split.plus
    denom = a @ (x @ x.T) + alpha * a + alpha * split.minus
    return a * np.sqrt(numer / denom)


def dnmf_multiplicative_update(v: object, deg: object, a: object, x: object, alpha: float) -> np.ndarray:
    """
    Minimizer of the degree auxiliary function: A ⊙ √y with
    y = (√(b² + 8αq(c + αe)) − b) / (4αq), b = AXXᵀ, c = VXᵀ, e = H1·1ᵀA, q = AAᵀ1·1ᵀA.
    Requires α > 0.
    """

    v, _, a, x = _conform(v, a, x)
    d = _degrees_for(deg, a)
    col = a.sum(axis=0)
    b = a @ (x @ x.T)
    c = v @ x.T
    e = np.outer(d, col)
    q = np.outer(a @ col, col)
    y = (np.sqrt(b**2 + 8.0 * alpha * q * (c + alpha * e)) - b) / (4.0 * alpha * q)
    return a * np.sqrt(y)


def tnmf_multiplicative_update(v: object, t: TreeMask, a: object, x: object, alpha: float) -> np.ndarray:
    """
    A ⊙ √y with y = (√(b² + 4α·q̄·(c + α·t)) − b) / (2α·q̄),
    b = AXXᵀ, c = VXᵀ, t = (T ⊙ AAᵀ)A, q̄ = (T̄ ⊙ AAᵀ)A. Requires α > 0.
    """

    v, _, a, x = _conform(v, a, x)
    s = a @ a.T
    b = a @ (x @ x.T)
    c = v @ x.T
    on_tree = (t.mask * s) @ a
    off_tree = (t.complement * s) @ a
    y = (np.sqrt(b**2 + 4.0 * alpha * off_tree * (c + alpha * on_tree)) - b) / (2.0 * alpha * off_tree)
    return a * np.sqrt(y)


# ---------------------------------------------------------------------------
# Pre-solve and driver
# ---------------------------------------------------------------------------


def _uniform_init(rng: np.random.Generator, shape: tuple[int, int], sigma: float) -> np.ndarray:
    # (σ, 1]
    return sigma + (1.0 - sigma) * (1.0 - rng.random(shape))


def symmetric_nmf(h: HorizontalNetwork, k: int, cfg: FactorConfig) -> np.ndarray:
    """
    P = argmin_{P ≥ 0} ½‖H − PPᵀ‖² by P ← P ⊙ HP / (PPᵀP + δ). An iteration that
    would raise the objective is retried with the damped update P ⊙ (½ + ½·ratio);
    if that also fails the current (best) iterate is returned.
    """

    n = h.size
    if not 1 <= k <= n:
        raise DimensionError(f"symmetric_nmf: k={k} must be within [1, {n}]")

    w = h.weights
    rng = np.random.default_rng((cfg.seed, _SYMNMF_STREAM))
    p = _uniform_init(rng, (n, k), cfg.sigma)

    def cost(pc: np.ndarray) -> float:
        return 0.5 * _sqnorm(w - pc @ pc.T)

    current = cost(p)
    for it in range(cfg.max_iter):
        ratio = (w @ p) / (p @ (p.T @ p) + cfg.delta)
        candidate = p * ratio
        value = cost(candidate)
        if value > current:
            candidate = p * (0.5 + 0.5 * ratio)
            value = cost(candidate)
            if value > current:
                logger.debug("symmetric_nmf: no descent at iteration %s; stopping", it)
                break
        p, previous, current = candidate, current, value
        if abs(previous - current) < cfg.stop_tol:
            break

    logger.debug("symmetric_nmf: n=%s k=%s objective=%.6g", n, k, current)
    return p


def build_structure_target(h: HorizontalNetwork, variant: Variant, cfg: FactorConfig) -> StructureTarget | None:
    if variant == Variant.plain:
        return None
    if variant == Variant.whole:
        return StructureTarget.from_anchor(symmetric_nmf(h, cfg.k, cfg), variant=Variant.whole)
    if variant == Variant.community:
        return StructureTarget.from_anchor(community_basis(h, cfg.k).basis, variant=Variant.community)
    if variant == Variant.degree:
        return StructureTarget.from_degrees(degree_sequence(h))
    return StructureTarget.from_tree(max_spanning_tree(h), h.weights)


def scaled_degree_gap(f: np.ndarray, target: StructureTarget) -> float:
    """Relative distance between the scaled and the exact degree gradients at F."""

    numer, denom = structure_split(f, target, degree_gradient=DegreeGradient.scaled)
    exact_numer, exact_denom = structure_split(f, target)
    exact = exact_denom - exact_numer
    return float(np.linalg.norm((denom - numer) - exact) / max(float(np.linalg.norm(exact)), np.finfo(float).tiny))


def _warn_scaled_degree(f: np.ndarray, target: StructureTarget | None, cfg: FactorConfig, side: str) -> None:
    if target is None or target.degrees is None or cfg.degree_gradient != DegreeGradient.scaled:
        return
    logger.warning(
        "Scaled degree gradient on %s differs from the exact gradient by %.3g (relative) at the start point",
        side,
        scaled_degree_gap(f, target),
    )


def factorize(
    v: object,
    h1: HorizontalNetwork | None,
    h2: HorizontalNetwork | None,
    variant: Variant,
    cfg: FactorConfig,
) -> FactorResult:
    """
    Alternate one A step and one X step per iteration from a seeded uniform(σ, 1]
    start. Stops after cfg.max_iter iterations or when the cost changes by less
    than cfg.stop_tol (absolute). The trace holds the cost after every iteration.
    """

    v = require_nonnegative(as_matrix(v, name="V"), name="V")
    n, p = v.shape
    variant = Variant(variant)
    if variant != Variant.plain and h1 is None:
        raise InputError(f"variant {variant.value} needs a horizontal network")
    if h1 is not None and h1.size != n:
        raise DimensionError(f"H is {h1.size}x{h1.size} but V is {shape_str(v.shape)}")
    if h2 is not None and h2.size != p:
        raise DimensionError(f"H2 is {h2.size}x{h2.size} but V is {shape_str(v.shape)}")

    target = build_structure_target(h1, variant, cfg) if h1 is not None else None
    target2 = build_structure_target(h2, variant, cfg) if h2 is not None else None
    alpha, alpha2 = cfg.alpha, cfg.second_alpha

    rng = np.random.default_rng(cfg.seed)
    a = _uniform_init(rng, (n, cfg.k), cfg.sigma)
    x = _uniform_init(rng, (cfg.k, p), cfg.sigma)
    _warn_scaled_degree(a, target, cfg, "A")
    _warn_scaled_degree(x.T, target2, cfg, "X")

    def cost_a(ac: np.ndarray) -> float:
        return objective(v, ac, x, target, alpha, target2, alpha2)

    def cost_x(xc: np.ndarray) -> float:
        return objective(v, a, xc, target, alpha, target2, alpha2)

    current = cost_a(a)
    trace: list[float] = []
    terminated = Termination.max_iter_reached
    for it in range(cfg.max_iter):
        a, after_a = _a_step(v, a, x, target, alpha, cfg, cost_a, current)
        x, after_x = _x_step(v, a, x, target2, alpha2, cfg, cost_x, after_a)
        trace.append(after_x)
        if abs(current - after_x) < cfg.stop_tol:
            terminated = Termination.stationary
            current = after_x
            break
        current = after_x
        if logger.isEnabledFor(logging.DEBUG) and it % 500 == 0:
            logger.debug("%s iteration %s cost=%.10g", variant.label, it, current)

    logger.info(
        "Factorized %s: V=%s k=%s alpha=%s two_level=%s iterations=%s terminated=%s cost=%.10g",
        variant.label,
        shape_str(v.shape),
        cfg.k,
        alpha,
        h2 is not None,
        len(trace),
        terminated.value,
        current,
    )
    return FactorResult(a=a, x=x, trace=trace, terminated=terminated, variant=variant)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _conform(
    v: object, a: object, x: object, *, p: object | None = None
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray, np.ndarray]:
    v = as_matrix(v, name="V")
    a = as_matrix(a, name="A")
    x = as_matrix(x, name="X")
    if a.shape[0] != v.shape[0] or x.shape[1] != v.shape[1] or a.shape[1] != x.shape[0]:
        raise DimensionError(
            f"shapes do not conform: V {shape_str(v.shape)}, A {shape_str(a.shape)}, X {shape_str(x.shape)}"
        )
    pm = None
    if p is not None:
        pm = as_matrix(p, name="P")
        if pm.shape != a.shape:
            raise DimensionError(f"P is {shape_str(pm.shape)} but A is {shape_str(a.shape)}")
    return v, pm, a, x


def _degrees_for(deg: object, a: np.ndarray) -> np.ndarray:
    d = as_vector(deg, name="degree vector")
    if d.shape[0] != a.shape[0]:
        raise DimensionError(f"degree vector has {d.shape[0]} entries but A has {a.shape[0]} rows")
    return d


def _sqnorm(m: np.ndarray) -> float:
    # No finiteness check: inf/nan must reach the step guard.
    flat = m.ravel()
    return float(np.dot(flat, flat))


def _check_tree(t: TreeMask, a: np.ndarray) -> None:
    if t.size != a.shape[0]:
        raise DimensionError(f"tree mask is {t.size}x{t.size} but A has {a.shape[0]} rows")

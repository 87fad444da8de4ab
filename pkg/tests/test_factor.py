import logging

import numpy as np
import pytest

from netfactor.errors import DimensionError, InputError
from netfactor.evaluation import reconstruction_error
from netfactor.factor import (
    StructureTarget,
    _guarded_descent,
    _uniform_init,
    clip_factor,
    clipped_step_size,
    dnmf_a_gradient,
    dnmf_a_gradient_exact,
    dnmf_a_step,
    dnmf_multiplicative_update,
    factorize,
    nnmf_a_gradient,
    nnmf_a_step,
    nnmf_multiplicative_update,
    objective,
    scaled_degree_gap,
    structure_cost,
    structure_split,
    symmetric_nmf,
    tnmf_a_gradient,
    tnmf_a_step,
    tnmf_fit_gradient,
    tnmf_multiplicative_update,
    update_x_step,
    x_gradient,
)
from netfactor.matcore import hadamard
from netfactor.models import DegreeGradient, FactorConfig, Termination, Variant
from netfactor.netstruct import (
    HorizontalNetwork,
    community_basis,
    degree_sequence,
    max_spanning_tree,
    tree_mask_from_edges,
)

STRUCTURED = [Variant.whole, Variant.community, Variant.degree, Variant.tree]


def _instance(rng, n=8, p=6, k=3):
    return rng.random((n, p)), rng.random((n, k)) + 0.1, rng.random((k, p)) + 0.1


def _network(rng, n, density=1.0):
    w = np.triu(rng.random((n, n)) * (rng.random((n, n)) < density), k=1)
    return HorizontalNetwork(w + w.T)


def _central_difference(f, m, h=1e-6):
    out = np.zeros_like(m)
    for idx in np.ndindex(*m.shape):
        up = m.copy()
        down = m.copy()
        up[idx] += h
        down[idx] -= h
        out[idx] = (f(up) - f(down)) / (2 * h)
    return out


def _rel_err(got, expected):
    return float(np.linalg.norm(got - expected) / max(np.linalg.norm(expected), 1e-300))


def _assert_monotone(trace):
    for prev, cur in zip(trace, trace[1:]):
        assert cur <= prev + 1e-9 * (1.0 + abs(prev))


class TestXStep:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            v, a, x = _instance(rng)
            fd = _central_difference(lambda xc: 0.5 * np.sum((v - a @ xc) ** 2), x)
            assert _rel_err(x_gradient(v, a, x), fd) < 1e-5

    def test_stationary_point_unchanged(self):
        rng = np.random.default_rng(1)
        _, a, x = _instance(rng)
        v = a @ x
        np.testing.assert_allclose(update_x_step(v, a, x, FactorConfig(k=3)), x, rtol=1e-12, atol=1e-14)

    def test_cost_never_increases(self):
        rng = np.random.default_rng(2)
        cfg = FactorConfig(k=3)
        for _ in range(100):
            v, a, x = _instance(rng)
            new_x = update_x_step(v, a, x, cfg)
            assert new_x.min() >= 0.0
            assert 0.5 * np.sum((v - a @ new_x) ** 2) <= 0.5 * np.sum((v - a @ x) ** 2) + 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            update_x_step(np.ones((4, 5)), np.ones((4, 2)), np.ones((3, 5)), FactorConfig(k=2))


class TestNnmfGradient:
    def test_stationary_points(self):
        rng = np.random.default_rng(3)
        _, a, x = _instance(rng)
        v = a @ x
        np.testing.assert_allclose(nnmf_a_gradient(v, rng.random(a.shape), a, x, 0.0), 0.0, atol=1e-12)
        np.testing.assert_allclose(nnmf_a_gradient(v, a, a, x, 2.5), 0.0, atol=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            v, a, x = _instance(rng)
            p = rng.standard_normal(a.shape)

            def cost(ac):
                return 0.5 * np.sum((v - ac @ x) ** 2) + 0.7 * 0.5 * np.sum((p - ac) ** 2)

            assert _rel_err(nnmf_a_gradient(v, p, a, x, 0.7), _central_difference(cost, a)) < 1e-5

    def test_step_reduces_to_square_root_update(self):
        rng = np.random.default_rng(5)
        v, a, x = _instance(rng)
        p = rng.random(a.shape)
        alpha = 0.5
        numer = v @ x.T + alpha * p
        denom = a @ (x @ x.T) + alpha * a
        step = clipped_step_size(a, numer, denom, 1e-300) * (denom - numer)
        np.testing.assert_allclose(a - step, nnmf_multiplicative_update(v, p, a, x, alpha), rtol=1e-8)

    def test_step_is_monotone_and_nonnegative(self):
        rng = np.random.default_rng(6)
        v = rng.random((20, 15))
        p = rng.standard_normal((20, 4))
        a, x = rng.random((20, 4)), rng.random((4, 15))
        cfg = FactorConfig(k=4, alpha=0.5)
        target = StructureTarget.from_anchor(p)
        previous = objective(v, a, x, target, cfg.alpha)
        for _ in range(500):
            a = nnmf_a_step(v, p, a, x, cfg)
            x = update_x_step(v, a, x, cfg)
            current = objective(v, a, x, target, cfg.alpha)
            assert current <= previous + 1e-9 * (1.0 + abs(previous))
            assert a.min() >= 0.0 and x.min() >= 0.0
            previous = current

    def test_rejects_negative_a(self):
        with pytest.raises(InputError):
            nnmf_a_step(np.ones((2, 2)), np.ones((2, 1)), -np.ones((2, 1)), np.ones((1, 2)), FactorConfig(k=1))

    def test_community_term_non_increasing_from_anchor(self):
        rng = np.random.default_rng(32)
        h = _network(rng, 12)
        p = community_basis(h, 3).basis
        a = np.maximum(p, 0.0)
        x = rng.random((3, 9)) + 0.1
        v = a @ x
        cfg = FactorConfig(k=3, alpha=1.0)
        previous = 0.5 * np.sum((p - a) ** 2)
        for _ in range(50):
            a = nnmf_a_step(v, p, a, x, cfg)
            x = update_x_step(v, a, x, cfg)
            current = 0.5 * np.sum((p - a) ** 2)
            assert current <= previous + 1e-12
            previous = current


class TestDegreeGradient:
    def test_scaled_formula_matches_literal_evaluation(self):
        rng = np.random.default_rng(7)
        v, a, x = _instance(rng, 8, 6, 3)
        h = _network(rng, 8)
        ones_col, ones_row = np.ones((8, 1)), np.ones((1, 8))
        alpha = 1.3
        literal = (
            -v @ x.T
            + a @ x @ x.T
            - alpha * h.weights @ ones_col @ ones_row @ a
            + 2 * alpha * a @ a.T @ ones_col @ ones_row @ a
        )
        got = dnmf_a_gradient(v, degree_sequence(h), a, x, alpha)
        np.testing.assert_allclose(got, literal, rtol=1e-12, atol=1e-12 * np.abs(literal).max())

    def test_zero_alpha_is_plain_gradient(self):
        rng = np.random.default_rng(8)
        v, a, x = _instance(rng)
        plain = a @ x @ x.T - v @ x.T
        deg = rng.random(8)
        np.testing.assert_allclose(dnmf_a_gradient(v, deg, a, x, 0.0), plain, rtol=1e-12)
        np.testing.assert_allclose(dnmf_a_gradient_exact(v, deg, a, x, 0.0), plain, rtol=1e-12)

    def test_exact_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            v, a, x = _instance(rng)
            d = degree_sequence(_network(rng, 8))

            def cost(ac):
                return 0.5 * np.sum((v - ac @ x) ** 2) + 0.5 * 0.3 * np.sum((d - ac @ ac.T @ np.ones(8)) ** 2)

            assert _rel_err(dnmf_a_gradient_exact(v, d, a, x, 0.3), _central_difference(cost, a)) < 1e-5

    @pytest.mark.parametrize("gradient", list(DegreeGradient))
    def test_step_is_monotone(self, gradient):
        rng = np.random.default_rng(10)
        v = rng.random((20, 15))
        d = degree_sequence(_network(rng, 20, 0.3))
        a, x = rng.random((20, 4)), rng.random((4, 15))
        cfg = FactorConfig(k=4, alpha=1.0, degree_gradient=gradient)
        target = StructureTarget.from_degrees(d)
        previous = objective(v, a, x, target, 1.0)
        for _ in range(500):
            a = dnmf_a_step(v, d, a, x, cfg)
            x = update_x_step(v, a, x, cfg)
            current = objective(v, a, x, target, 1.0)
            assert current <= previous + 1e-9 * (1.0 + abs(previous))
            previous = current

    def test_multiplicative_update_solves_its_quadratic(self):
        rng = np.random.default_rng(11)
        v, a, x = _instance(rng)
        d = degree_sequence(_network(rng, 8))
        alpha = 0.8
        y = (dnmf_multiplicative_update(v, d, a, x, alpha) / a) ** 2
        col = a.sum(axis=0)
        b, c = a @ x @ x.T, v @ x.T
        e, q = np.outer(d, col), np.outer(a @ col, col)
        np.testing.assert_allclose(2 * alpha * q * y**2 + b * y, c + alpha * e, rtol=1e-9)


class TestTreeGradient:
    def test_matches_literal_formula(self):
        rng = np.random.default_rng(12)
        v, a, x = _instance(rng, 8, 6, 3)
        t = max_spanning_tree(_network(rng, 8))
        s = a @ a.T
        literal = (-v @ x.T + a @ x @ x.T) + 2.0 * (hadamard(t.complement - t.mask, s) @ a)
        got = tnmf_a_gradient(v, t, a, x, 2.0)
        np.testing.assert_allclose(got, literal, rtol=1e-12, atol=1e-12 * np.abs(literal).max())

    def test_empty_tree_is_pure_penalty(self):
        rng = np.random.default_rng(13)
        v, a, x = _instance(rng)
        t = tree_mask_from_edges(8, [])
        structure = tnmf_a_gradient(v, t, a, x, 1.0) - tnmf_a_gradient(v, t, a, x, 0.0)
        np.testing.assert_allclose(structure, hadamard(t.complement, a @ a.T) @ a, rtol=1e-10)
        assert structure.min() >= 0.0

    def test_matches_finite_differences_of_contrast_cost(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            v, a, x = _instance(rng)
            t = max_spanning_tree(_network(rng, 8))

            def cost(ac):
                s = ac @ ac.T
                contrast = np.sum((t.complement * s) ** 2) - np.sum((t.mask * s) ** 2)
                return 0.5 * np.sum((v - ac @ x) ** 2) + 0.9 * 0.25 * contrast

            assert _rel_err(tnmf_a_gradient(v, t, a, x, 0.9), _central_difference(cost, a)) < 1e-5

    def test_fit_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(30)
        for _ in range(20):
            v, a, x = _instance(rng)
            h = _network(rng, 8)
            t = max_spanning_tree(h)
            target = StructureTarget.from_tree(t, h.weights)
            fd = _central_difference(lambda ac: objective(v, ac, x, target, 0.9), a)
            assert _rel_err(tnmf_fit_gradient(v, t, a, x, 0.9, weights=h.weights), fd) < 1e-5

    def test_fit_cost_grows_with_scale(self):
        rng = np.random.default_rng(35)
        h = _network(rng, 8)
        target = StructureTarget.from_tree(max_spanning_tree(h), h.weights)
        a = rng.random((8, 3))
        costs = [structure_cost(c * a, target) for c in (1.0, 10.0, 100.0)]
        assert costs[0] >= 0.0
        assert costs == sorted(costs)

    def test_target_weights(self):
        rng = np.random.default_rng(36)
        h = _network(rng, 6)
        t = max_spanning_tree(h)
        target = StructureTarget.from_tree(t, h.weights)
        np.testing.assert_array_equal(target.tree_weights, t.mask * h.weights)
        # 5 edges: 10 tree entries against 20 off-tree entries.
        assert target.off_tree_weight == pytest.approx(0.5)
        np.testing.assert_array_equal(StructureTarget.from_tree(t).tree_weights, t.mask)
        assert StructureTarget.from_tree(tree_mask_from_edges(2, [(0, 1)])).off_tree_weight == 0.0
        with pytest.raises(DimensionError):
            StructureTarget.from_tree(t, np.ones((5, 5)))

    def test_step_is_monotone(self):
        rng = np.random.default_rng(15)
        v = rng.random((20, 15))
        t = max_spanning_tree(_network(rng, 20))
        a, x = rng.random((20, 4)), rng.random((4, 15))
        cfg = FactorConfig(k=4, alpha=1.0)
        target = StructureTarget.from_tree(t)
        previous = objective(v, a, x, target, 1.0)
        for _ in range(300):
            a = tnmf_a_step(v, t, a, x, cfg)
            x = update_x_step(v, a, x, cfg)
            current = objective(v, a, x, target, 1.0)
            assert current <= previous + 1e-9 * (1.0 + abs(previous))
            previous = current

    def test_multiplicative_update_solves_its_quadratic(self):
        rng = np.random.default_rng(16)
        v, a, x = _instance(rng)
        t = max_spanning_tree(_network(rng, 8))
        alpha = 0.6
        y = (tnmf_multiplicative_update(v, t, a, x, alpha) / a) ** 2
        s = a @ a.T
        b, c = a @ x @ x.T, v @ x.T
        on_tree, off_tree = (t.mask * s) @ a, (t.complement * s) @ a
        np.testing.assert_allclose(alpha * off_tree * y**2 + b * y, c + alpha * on_tree, rtol=1e-9)


class TestStructureSplit:
    @pytest.mark.parametrize("kind", ["anchor", "degree", "tree"])
    def test_split_is_gradient_of_structure_cost(self, kind):
        rng = np.random.default_rng(17)
        f = rng.random((7, 3))
        h = _network(rng, 7)
        if kind == "anchor":
            target = StructureTarget.from_anchor(rng.standard_normal((7, 3)))
        elif kind == "degree":
            target = StructureTarget.from_degrees(degree_sequence(h))
        else:
            target = StructureTarget.from_tree(max_spanning_tree(h))
        numer, denom = structure_split(f, target)
        assert numer.min() >= 0.0 and denom.min() >= 0.0
        fd = _central_difference(lambda fc: structure_cost(fc, target), f)
        assert _rel_err(denom - numer, fd) < 1e-5

    def test_scaled_degree_split(self):
        rng = np.random.default_rng(18)
        f = rng.random((6, 2))
        d = rng.random(6) * 5
        numer, denom = structure_split(f, StructureTarget.from_degrees(d), degree_gradient=DegreeGradient.scaled)
        col = f.sum(axis=0)
        np.testing.assert_allclose(denom - numer, 2 * np.outer(f @ col, col) - np.outer(d, col), rtol=1e-12)

    def test_scaled_degree_gap(self):
        rng = np.random.default_rng(34)
        f = rng.random((6, 2))
        d = rng.random(6) * 5
        col = f.sum(axis=0)
        resid = f @ col - d
        scaled = 2 * np.outer(f @ col, col) - np.outer(d, col)
        exact = np.outer(resid, col) + np.outer(np.ones(6), f.T @ resid)
        gap = scaled_degree_gap(f, StructureTarget.from_degrees(d))
        assert gap == pytest.approx(np.linalg.norm(scaled - exact) / np.linalg.norm(exact), rel=1e-10)
        assert gap > 0.0


class TestClipping:
    def test_clip_factor_lifts_only_negative_gradient_entries(self):
        m = np.array([[0.0, 0.0], [0.5, 1e-12]])
        grad = np.array([[-1.0, 1.0], [-1.0, -2.0]])
        np.testing.assert_array_equal(clip_factor(m, grad, 1e-9), [[1e-9, 0.0], [0.5, 1e-9]])

    def test_step_size_is_nonnegative(self):
        rng = np.random.default_rng(19)
        eta = clipped_step_size(rng.random((4, 3)), rng.random((4, 3)), rng.random((4, 3)), 1e-9)
        assert eta.min() >= 0.0


class TestStepGuard:
    @pytest.mark.parametrize("bad", [-np.inf, np.nan])
    def test_rejects_non_finite_candidates(self, bad):
        current = np.ones((2, 2))
        step = np.full((2, 2), 0.1)
        step[0, 1] = bad
        out, value = _guarded_descent(current, step, lambda c: 0.0, 1.0, 5, label="A")
        assert out is current
        assert value == 1.0

    def test_rejects_non_finite_cost(self):
        current = np.ones((2, 2))
        out, value = _guarded_descent(current, np.full((2, 2), 0.1), lambda c: float("inf"), 1.0, 5, label="A")
        assert out is current
        assert value == 1.0

    def test_halves_until_descent(self):
        current = np.ones((2, 2))

        def cost(c):
            return float(np.sum((c - 0.9) ** 2))

        out, value = _guarded_descent(current, np.full((2, 2), 4.0), cost, cost(current), 10, label="A")
        np.testing.assert_allclose(out, 0.875)
        assert value == pytest.approx(cost(out))


class TestSymmetricNmf:
    def test_zero_network(self):
        p = symmetric_nmf(HorizontalNetwork(np.zeros((5, 5))), 2, FactorConfig(k=2))
        assert np.max(p @ p.T) < 1e-4

    def test_two_cliques_beat_rank_one_optimum(self):
        w = np.zeros((10, 10))
        w[:5, :5] = 1.0
        w[5:, 5:] = 1.0
        np.fill_diagonal(w, 0.0)
        h = HorizontalNetwork(w)
        p = symmetric_nmf(h, 2, FactorConfig(k=2, max_iter=3000))
        rank_one = 0.5 * (np.sum(w**2) - w.sum() ** 2 / 100.0)
        assert p.min() >= 0.0
        assert 0.5 * np.sum((w - p @ p.T) ** 2) < rank_one

    def test_k_out_of_range(self):
        with pytest.raises(DimensionError):
            symmetric_nmf(HorizontalNetwork(np.zeros((3, 3))), 4, FactorConfig(k=4))


class TestFactorize:
    @pytest.mark.parametrize("variant", STRUCTURED)
    @pytest.mark.parametrize("alpha", [0.1, 1.0, 10.0])
    def test_traces_are_monotone_and_factors_nonnegative(self, variant, alpha):
        rng = np.random.default_rng(20)
        for seed in range(3):
            v = rng.random((30, 20))
            h = _network(rng, 30)
            result = factorize(v, h, None, variant, FactorConfig(k=5, alpha=alpha, max_iter=150, seed=seed))
            _assert_monotone(result.trace)
            assert result.a.min() >= 0.0 and result.x.min() >= 0.0
            assert result.variant == variant

    def test_zero_alpha_decouples_variants(self):
        rng = np.random.default_rng(21)
        v = rng.random((12, 9))
        h = _network(rng, 12)
        cfg = FactorConfig(k=3, alpha=0.0, max_iter=200, seed=4)
        baseline = factorize(v, None, None, Variant.plain, cfg)
        for variant in STRUCTURED:
            result = factorize(v, h, None, variant, cfg)
            np.testing.assert_array_equal(result.a, baseline.a)
            np.testing.assert_array_equal(result.x, baseline.x)
            assert result.trace == baseline.trace

    def test_planted_factors_are_recovered(self):
        rng = np.random.default_rng(22)
        v = rng.random((40, 5)) @ rng.random((5, 30))
        result = factorize(v, None, None, Variant.plain, FactorConfig(k=5, alpha=0.0, max_iter=5000, seed=1))
        assert reconstruction_error(v, result.a, result.x) < 1e-4

    def test_degree_term_decreases(self):
        rng = np.random.default_rng(23)
        v = rng.random((30, 20))
        h = _network(rng, 30)
        cfg = FactorConfig(k=5, alpha=1.0, max_iter=300, seed=2)
        target = StructureTarget.from_degrees(degree_sequence(h))
        init = _uniform_init(np.random.default_rng(cfg.seed), (30, 5), cfg.sigma)
        result = factorize(v, h, None, Variant.degree, cfg)
        assert structure_cost(result.a, target) < structure_cost(init, target)

    def test_tree_mass_concentrates_on_tree_edges(self):
        rng = np.random.default_rng(31)
        v = rng.random((20, 15))
        h = _network(rng, 20)
        t = max_spanning_tree(h)
        cfg = FactorConfig(k=4, alpha=10.0, max_iter=300, seed=3)

        def ratio(a):
            s = a @ a.T
            return s[t.mask > 0].mean() / s[t.complement > 0].mean()

        init = _uniform_init(np.random.default_rng(cfg.seed), (20, 4), cfg.sigma)
        result = factorize(v, h, None, Variant.tree, cfg)
        _assert_monotone(result.trace)
        assert ratio(result.a) > 2.0 * ratio(init)

    def test_scaled_degree_gradient_logs_its_deviation(self, caplog):
        rng = np.random.default_rng(33)
        v = rng.random((10, 8))
        h = _network(rng, 10)
        cfg = FactorConfig(k=3, alpha=1.0, max_iter=5, degree_gradient=DegreeGradient.scaled)
        with caplog.at_level(logging.WARNING, logger="netfactor.factor"):
            factorize(v, h, None, Variant.degree, cfg)
        warnings = [r for r in caplog.records if r.name == "netfactor.factor" and r.levelno == logging.WARNING]
        assert len(warnings) == 1
        assert "Scaled degree gradient on A" in warnings[0].getMessage()

    def test_exact_degree_gradient_does_not_warn(self, caplog):
        rng = np.random.default_rng(33)
        v = rng.random((10, 8))
        h = _network(rng, 10)
        with caplog.at_level(logging.WARNING, logger="netfactor.factor"):
            factorize(v, h, None, Variant.degree, FactorConfig(k=3, alpha=1.0, max_iter=5))
        assert not [r for r in caplog.records if r.levelno >= logging.WARNING]

    def test_deterministic(self):
        rng = np.random.default_rng(24)
        v = rng.random((10, 8))
        h = _network(rng, 10)
        cfg = FactorConfig(k=3, alpha=1.0, max_iter=100, seed=9)
        first = factorize(v, h, None, Variant.tree, cfg)
        second = factorize(v, h, None, Variant.tree, cfg)
        np.testing.assert_array_equal(first.a, second.a)
        assert first.trace == second.trace

    def test_two_level(self):
        rng = np.random.default_rng(25)
        v = rng.random((10, 7))
        result = factorize(v, _network(rng, 10), _network(rng, 7), Variant.community, FactorConfig(k=3, max_iter=100))
        _assert_monotone(result.trace)
        assert result.x.shape == (3, 7)

    def test_termination(self):
        rng = np.random.default_rng(26)
        v = rng.random((6, 5))
        short = factorize(v, None, None, Variant.plain, FactorConfig(k=2, max_iter=3))
        assert short.terminated == Termination.max_iter_reached
        assert short.iterations == 3
        loose = factorize(v, None, None, Variant.plain, FactorConfig(k=2, max_iter=1000, stop_tol=1e3))
        assert loose.terminated == Termination.stationary
        assert loose.iterations == 1

    def test_input_errors(self):
        rng = np.random.default_rng(27)
        v = rng.random((6, 5))
        h = _network(rng, 6)
        with pytest.raises(InputError):
            factorize(-v, h, None, Variant.whole, FactorConfig(k=2))
        with pytest.raises(InputError):
            factorize(v, None, None, Variant.degree, FactorConfig(k=2))
        with pytest.raises(DimensionError):
            factorize(v, _network(rng, 5), None, Variant.tree, FactorConfig(k=2))
        with pytest.raises(DimensionError):
            factorize(v, h, _network(rng, 4), Variant.tree, FactorConfig(k=2))


@pytest.mark.slow
@pytest.mark.parametrize("variant", STRUCTURED)
def test_monotone_descent_on_fifty_instances(variant):
    rng = np.random.default_rng(100)
    for seed in range(50):
        v = rng.random((30, 20))
        h = _network(rng, 30)
        for alpha in (0.1, 1.0, 10.0):
            result = factorize(v, h, None, variant, FactorConfig(k=5, alpha=alpha, max_iter=1000, seed=seed))
            _assert_monotone(result.trace)


@pytest.mark.slow
@pytest.mark.parametrize("variant", STRUCTURED)
def test_planted_recovery_every_variant(variant):
    rng = np.random.default_rng(101)
    v = rng.random((40, 5)) @ rng.random((5, 30))
    h = _network(rng, 40)
    result = factorize(v, h, None, variant, FactorConfig(k=5, alpha=0.0, max_iter=5000, seed=1))
    assert reconstruction_error(v, result.a, result.x) < 1e-4

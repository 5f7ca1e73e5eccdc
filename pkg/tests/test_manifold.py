import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risbeam.manifold import (ArmijoParams, LineSearchError, RetractionError,
                              armijo_search, euclidean_cg_minimize,
                              is_unit_modulus, project_tangent,
                              random_unit_modulus, rcg_minimize, real_inner,
                              retract, riemannian_gradient)


def _rng(seed=0):
    return np.random.default_rng(seed)


def _point(n, seed=0):
    return random_unit_modulus(n, _rng(seed))


complex_vectors = st.integers(1, 12).flatmap(
    lambda n: st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False,
                                          allow_infinity=False),
                       min_size=n, max_size=n))


class TestProjection:
    def test_radial_direction_annihilated(self):
        theta = _point(6)
        np.testing.assert_allclose(project_tangent(theta, theta), 0.0, atol=1e-14)

    def test_rotational_direction_unchanged(self):
        theta = _point(6, seed=1)
        np.testing.assert_allclose(project_tangent(theta, 1j * theta), 1j * theta,
                                   atol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(complex_vectors, st.integers(0, 2 ** 31 - 1))
    def test_idempotent_and_tangent(self, d, seed):
        d = np.asarray(d)
        theta = _point(len(d), seed)
        once = project_tangent(theta, d)
        twice = project_tangent(theta, once)
        scale = max(1.0, np.max(np.abs(d)))
        assert np.max(np.abs(once - twice)) < 1e-12 * scale
        assert np.max(np.abs((once * theta.conj()).real)) < 1e-10 * scale

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            project_tangent(_point(3), np.zeros(4, complex))


class TestRetraction:
    def test_fixed_point_on_manifold(self):
        theta = _point(5, seed=2)
        np.testing.assert_allclose(retract(theta), theta, atol=1e-15)

    def test_normalizes(self):
        np.testing.assert_allclose(retract(np.array([2.0, -3.0j])),
                                   np.array([1.0, -1.0j]), atol=1e-15)

    def test_zero_entry_rejected(self):
        with pytest.raises(RetractionError):
            retract(np.array([1.0, 0.0j]))

    @settings(max_examples=40, deadline=None)
    @given(complex_vectors)
    def test_unit_modulus_output(self, x):
        x = np.asarray(x)
        if np.any(np.abs(x) < 1e-12):
            return
        assert is_unit_modulus(retract(x), atol=1e-12)


class TestRiemannianGradient:
    def test_tangent_input_passthrough(self):
        theta = _point(4, seed=3)
        g = 1j * theta * np.array([0.5, -2.0, 0.1, 3.0])  # entrywise tangent
        np.testing.assert_allclose(riemannian_gradient(theta, g), g, atol=1e-13)

    def test_zero_gradient(self):
        theta = _point(4, seed=4)
        np.testing.assert_allclose(riemannian_gradient(theta, np.zeros(4, complex)),
                                   0.0, atol=1e-15)

    def test_tangency_invariant(self):
        rng = _rng(5)
        theta = random_unit_modulus(16, rng)
        g = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        rg = riemannian_gradient(theta, g)
        assert np.max(np.abs((rg * theta.conj()).real)) < 1e-10


def _quadratic(target):
    def cost(x):
        return float(np.sum(np.abs(x - target) ** 2))

    def grad(x):
        return x - target

    return cost, grad


class TestArmijo:
    def test_quadratic_accepts_early(self):
        target = _point(2, seed=6)
        theta = _point(2, seed=7)
        cost, grad = _quadratic(target)
        g = project_tangent(theta, grad(theta))
        res = armijo_search(cost, theta, -g, g)
        assert res.step in (1.0, 0.5)
        assert res.cost < cost(theta)

    def test_zero_direction_trivially_accepted(self):
        theta = _point(3, seed=8)
        cost, grad = _quadratic(_point(3, seed=9))
        g = project_tangent(theta, grad(theta))
        res = armijo_search(cost, theta, np.zeros(3, complex), g)
        assert res.step == 1.0
        assert res.cost == cost(theta)

    def test_ascent_direction_rejected(self):
        theta = _point(3, seed=10)
        cost, grad = _quadratic(_point(3, seed=11))
        g = project_tangent(theta, grad(theta))
        with pytest.raises(ValueError):
            armijo_search(cost, theta, +g, g)

    def test_halving_budget_exhaustion(self):
        theta = _point(2, seed=12)
        d = project_tangent(theta, 1j * theta)
        fake_grad = d  # claims descent along -d
        calls = {"n": 0}

        def hostile_cost(x):
            calls["n"] += 1
            return float(calls["n"])  # strictly increasing, never acceptable

        with pytest.raises(LineSearchError):
            armijo_search(hostile_cost, theta, -d, fake_grad,
                          ArmijoParams(max_halvings=10), cost_at_base=0.0)


class TestRcg:
    def test_zero_gradient_start_returns_immediately(self):
        theta = _point(5, seed=13)
        cost, grad = _quadratic(theta)
        res = rcg_minimize(cost, grad, theta)
        assert len(res.cost_trace) == 1
        assert res.iterations == 0
        np.testing.assert_allclose(res.point, theta)

    def test_phase_matching_beats_brute_force_grid(self):
        # maximize |a^H diag(theta) b| over two phases; exhaustive 360x360
        # grid is the independent optimum oracle
        rng = _rng(14)
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        c = a.conj() * b

        def cost(th):
            return -abs(np.sum(c * th))

        def grad(th):
            s = np.sum(c * th)
            return -0.5 * s * c.conj() / max(abs(s), 1e-300)

        res = rcg_minimize(cost, grad, random_unit_modulus(2, rng),
                           grad_tol=1e-9, cost_tol=1e-14)
        ph = np.exp(1j * np.deg2rad(np.arange(360)))
        grid_best = float(np.min(-np.abs(np.add.outer(c[0] * ph, c[1] * ph))))
        assert res.final_cost <= grid_best + 1e-6
        # analytic optimum: aligned phases collect sum of magnitudes
        assert res.final_cost == pytest.approx(-np.sum(np.abs(c)), abs=1e-6)

    def test_trace_monotone_and_iterates_feasible(self):
        rng = _rng(15)
        target = random_unit_modulus(12, rng)
        cost, grad = _quadratic(target)
        seen = []

        def recording_grad(x):
            seen.append(x.copy())
            return grad(x)

        res = rcg_minimize(cost, recording_grad, random_unit_modulus(12, rng))
        assert np.all(np.diff(res.cost_trace) <= 1e-12)
        for x in seen:
            assert is_unit_modulus(x, atol=1e-12)
            rg = project_tangent(x, grad(x))
            assert np.max(np.abs((rg * x.conj()).real)) < 1e-10
        assert res.converged
        assert res.final_cost < 1e-8

    def test_off_manifold_start_rejected(self):
        cost, grad = _quadratic(_point(3))
        with pytest.raises(ValueError):
            rcg_minimize(cost, grad, np.array([2.0, 1.0, 1.0], dtype=complex))

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_random_quartic_costs_monotone(self, seed):
        rng = np.random.default_rng(seed)
        n = 6
        h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = h @ h.conj().T / n

        def cost(x):
            q = float((x.conj() @ h @ x).real)
            return q * q

        def grad(x):
            q = float((x.conj() @ h @ x).real)
            return 2.0 * q * (h @ x)

        res = rcg_minimize(cost, grad, random_unit_modulus(n, rng), max_iters=60)
        assert np.all(np.diff(res.cost_trace) <= 1e-9 * max(1.0, res.cost_trace[0]))


class TestEuclideanCg:
    def test_least_squares_toy(self):
        rng = _rng(16)
        a = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
        y = rng.standard_normal(8) + 1j * rng.standard_normal(8)

        def cost(x):
            return float(np.sum(np.abs(a @ x - y) ** 2))

        def grad(x):
            return a.conj().T @ (a @ x - y)

        x0 = np.zeros(4, dtype=complex)
        res = euclidean_cg_minimize(cost, grad, x0, max_iters=400,
                                    grad_tol=1e-10, cost_tol=1e-15)
        x_star, *_ = np.linalg.lstsq(a, y, rcond=None)
        assert cost(res.point) <= cost(x_star) + 1e-8
        assert np.all(np.diff(res.cost_trace) <= 1e-12)

    def test_matrix_variable(self):
        rng = _rng(17)
        target = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))

        def cost(x):
            return float(np.sum(np.abs(x - target) ** 2))

        def grad(x):
            return x - target

        res = euclidean_cg_minimize(cost, grad, np.zeros((3, 2), complex))
        np.testing.assert_allclose(res.point, target, atol=1e-6)


class TestInnerProduct:
    @settings(max_examples=30, deadline=None)
    @given(complex_vectors)
    def test_matches_componentwise_definition(self, v):
        v = np.asarray(v)
        w = np.roll(v, 1) + 0.5
        expected = float(np.sum((v.conj() * w).real))
        assert real_inner(v, w) == pytest.approx(expected, rel=1e-12, abs=1e-12)

import numpy as np
import pytest
from helpers import rand_pd

from invflow.ellipsoidal import (
    contains_convergence_ball,
    decrease_condition,
    gain_bounds,
    gain_matrix_inequality,
    saturated_control,
)
from invflow.numerics import pencil_max_eig
from invflow.simulate import worst_demand

H = np.array([[0.5], [0.5]])
RU = np.eye(2)


class TestDecreaseCondition:
    def test_outside_target(self):
        # 1 * (2*2)^2 - 2*2 = 12 > 0
        assert decrease_condition([2.0], [[1.0]], [[1.0]], 1.0)

    def test_origin_fails(self):
        assert not decrease_condition([0.0], [[1.0]], [[1.0]], 1.0)

    def test_target_boundary_fails(self):
        assert not decrease_condition([1.0], [[1.0]], [[1.0]], 1.0)

    def test_boundary_equivalence(self):
        # with k^2 above the pencil maximum the condition holds outside
        # the target; below it, a state along the top eigenvector on the
        # target boundary violates the boundary form of the inequality
        rng = np.random.default_rng(21)
        for _ in range(10):
            n = int(rng.integers(1, 3))
            p = rand_pd(rng, n)
            r_w = rand_pd(rng, n)
            k_min_sq, x_star = pencil_max_eig(p, r_w, names=("P", "R_w"))
            k_hi = np.sqrt(k_min_sq * (1.0 + 1e-9))
            for _ in range(100):
                x = rng.normal(size=n)
                v = float(x @ p @ x)
                if v == 0.0:
                    continue
                scale = np.sqrt(rng.uniform(1.0 + 1e-6, 100.0) / v)
                assert decrease_condition(scale * x, p, r_w, k_hi)
            k_lo_sq = k_min_sq * (1.0 - 1e-3)
            x_hat = x_star / np.sqrt(x_star @ p @ x_star)  # onto the target boundary
            y = p @ x_hat
            boundary_form = k_lo_sq - float(y @ np.linalg.solve(r_w, y))
            assert boundary_form < 0.0


class TestGainBounds:
    def test_running_example_level_two(self):
        cert = gain_bounds([[1.0]], [[1.0]], [[0.5]], xi=2.0, k=1.0)
        assert cert.k_min_sq == pytest.approx(1.0, abs=1e-12)
        assert cert.xi_max == pytest.approx(2.0, abs=1e-12)
        assert cert.linear_ok and cert.saturated_ok

    def test_level_three_fails_linear(self):
        cert = gain_bounds([[1.0]], [[1.0]], [[0.5]], xi=3.0, k=1.0)
        assert not cert.linear_ok
        assert cert.saturated_ok

    def test_scaled_demand_boundary_gain(self):
        rng = np.random.default_rng(22)
        r_w = rand_pd(rng, 2)
        phi = 0.1 * np.eye(2)
        cert = gain_bounds(r_w, r_w, phi, xi=1.0, k=1.0)
        assert cert.k_min_sq == pytest.approx(1.0, abs=1e-9)
        assert cert.saturated_ok

    def test_default_gain_is_minimal(self):
        cert = gain_bounds([[4.0]], [[1.0]], [[0.5]], xi=1.0)
        assert cert.k == pytest.approx(2.0, abs=1e-12)
        assert cert.saturated_ok

    def test_warns_when_target_exits_linear_region(self):
        with pytest.warns(UserWarning):
            gain_bounds([[1.0]], [[1.0]], [[0.5]], xi=1.0, k=2.0)


class TestSaturatedControl:
    def test_zero_state(self):
        assert np.allclose(saturated_control([0.0], 1.0, H, RU), [0.0, 0.0])

    def test_linear_branch(self):
        u = saturated_control([1.0], 1.0, H, RU)
        assert u == pytest.approx(np.array([-0.5, -0.5]), abs=1e-12)

    def test_saturated_branch_unit_norm(self):
        u = saturated_control([10.0], 1.0, H, RU)
        assert u @ u == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(u, -np.array([5.0, 5.0]) / np.sqrt(50.0))

    def test_feasible_everywhere(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            x = rng.normal(size=1) * rng.uniform(0.0, 50.0)
            u = saturated_control(x, 1.3, H, RU)
            assert u @ RU @ u <= 1.0 + 1e-12

    def test_continuity_across_switching_surface(self):
        # follow a ray through the switching surface k^2 x' Phi x = 1
        k = 1.0
        x_switch = np.sqrt(2.0)  # 0.5 x^2 = 1
        for eps in (1e-9, 1e-10):
            inside = saturated_control([x_switch - eps], k, H, RU)
            outside = saturated_control([x_switch + eps], k, H, RU)
            assert np.linalg.norm(inside - outside) <= 1e-8

    def test_decrease_under_worst_demand(self):
        # gain at the admissible minimum: the Lyapunov derivative is
        # negative outside the target for the worst boundary demand
        rng = np.random.default_rng(24)
        p = [[1.0]]
        r_w = [[1.0]]
        b = np.array([[1.0, 1.0]])
        for _ in range(50):
            x = np.array([rng.uniform(1.01, 10.0) * rng.choice([-1.0, 1.0])])
            u = saturated_control(x, 1.0, H, RU)
            w = worst_demand(x, p, r_w)
            vdot = 2.0 * float(x @ np.asarray(p) @ (b @ u - w))
            assert vdot < 0.0


class TestGainMatrixInequality:
    def test_unit_case_boundary(self):
        assert gain_matrix_inequality([[1.0]], [[1.0]], 1.0)

    def test_small_gain_fails(self):
        assert not gain_matrix_inequality([[1.0]], [[1.0]], 0.4)

    def test_scaled_multiples(self):
        # P = 2 R_w, k = 1.5: 2 * 2 R_w - 4 R_w = 0, boundary holds
        r_w = np.array([[1.0]])
        assert gain_matrix_inequality(2.0 * r_w, r_w, 1.5)


class TestContainsConvergenceBall:
    def test_boundary_gain(self):
        rng = np.random.default_rng(25)
        p = rand_pd(rng, 2)
        r_w = rand_pd(rng, 2)
        k_min_sq, _ = pencil_max_eig(p, r_w, names=("P", "R_w"))
        assert contains_convergence_ball(p, r_w, np.sqrt(k_min_sq))

    def test_large_gain(self):
        assert contains_convergence_ball([[1.0]], [[1.0]], 2.0)

    def test_small_gain_fails(self):
        assert not contains_convergence_ball([[4.0]], [[1.0]], 1.0)

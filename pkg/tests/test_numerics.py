import numpy as np
import pytest
from helpers import rand_pd

from invflow.errors import (
    NotPositiveDefinite,
    NotSymmetric,
    SingularLyapunov,
    SingularMatrix,
)
from invflow.numerics import (
    cholesky,
    det_and_inverse,
    golden_section_min,
    lyap_solve,
    pencil_max_eig,
    pivot_columns,
    sym_eig,
)


def grid_pencil_max(phi, r, resolution=40_000):
    """Brute-force pencil maximum: sweep the unit r-sphere maximizing w^T phi w."""
    phi = np.asarray(phi, dtype=float)
    r = np.asarray(r, dtype=float)
    if phi.shape[0] == 1:
        w = 1.0 / np.sqrt(r[0, 0])
        return float(phi[0, 0] * w * w)
    angles = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    scale = np.sqrt(np.einsum("ij,jk,ik->i", dirs, r, dirs))
    w = dirs / scale[:, None]
    return float(np.max(np.einsum("ij,jk,ik->i", w, phi, w)))


class TestSymEig:
    def test_identity(self):
        res = sym_eig(np.eye(2))
        assert np.allclose(res.values, [1.0, 1.0])

    def test_diagonal_sorted_ascending(self):
        res = sym_eig(np.diag([4.0, 1.0]))
        assert np.allclose(res.values, [1.0, 4.0])
        assert np.allclose(np.abs(res.vectors[:, 0]), [0.0, 1.0])
        assert np.allclose(np.abs(res.vectors[:, 1]), [1.0, 0.0])

    def test_random_reconstruction(self):
        rng = np.random.default_rng(51)
        s = rand_pd(rng, 3) - 2.0 * np.eye(3)
        res = sym_eig(s)
        rebuilt = res.vectors @ np.diag(res.values) @ res.vectors.T
        assert np.allclose(rebuilt, s, atol=1e-10 * (1 + np.linalg.norm(s)))

    def test_residual_and_orthonormality_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            g = rng.normal(size=(n, n))
            s = g + g.T
            res = sym_eig(s)
            for i in range(n):
                resid = np.linalg.norm(s @ res.vectors[:, i] - res.values[i] * res.vectors[:, i])
                assert resid <= 1e-10 * (1.0 + np.linalg.norm(s))
            assert np.allclose(res.vectors.T @ res.vectors, np.eye(n), atol=1e-10)
            rebuilt = res.vectors @ np.diag(res.values) @ res.vectors.T
            assert np.linalg.norm(rebuilt - s) <= 1e-9 * (1 + np.linalg.norm(s))

    def test_rejects_nonsymmetric(self):
        with pytest.raises(NotSymmetric):
            sym_eig([[0.0, 1.0], [0.0, 0.0]])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            sym_eig([[np.nan, 0.0], [0.0, 1.0]])


class TestCholesky:
    def test_identity(self):
        assert np.allclose(cholesky(np.eye(3)), np.eye(3))

    def test_roundtrip(self):
        s = np.array([[4.0, 2.0], [2.0, 3.0]])
        ell = cholesky(s)
        assert np.allclose(ell @ ell.T, s, atol=1e-12)
        assert np.all(np.diag(ell) > 0)

    def test_indefinite_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky([[1.0, 2.0], [2.0, 1.0]])

    def test_random_roundtrip_bound(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            s = rand_pd(rng, n, floor=1e-3)
            ell = cholesky(s)
            assert np.linalg.norm(ell @ ell.T - s) <= 1e-10 * np.linalg.norm(s)


class TestPencilMaxEig:
    def test_scalar_running_example(self):
        lam, w = pencil_max_eig([[0.5]], [[1.0]])
        assert lam == pytest.approx(0.5, abs=1e-12)
        assert abs(w[0]) == pytest.approx(1.0, abs=1e-12)

    def test_identity_pencil(self):
        lam, w = pencil_max_eig(np.eye(2), np.eye(2))
        assert lam == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-10)

    def test_hand_solved_two_by_two(self):
        # det(diag(2,8) - lam diag(1,2)) = 0 gives lam in {2, 4};
        # (Phi - 4 R) w = 0 forces w = (0, t) with 2 t^2 = 1.
        lam, w = pencil_max_eig(np.diag([2.0, 8.0]), np.diag([1.0, 2.0]))
        assert lam == pytest.approx(4.0, abs=1e-10)
        assert abs(w[0]) < 1e-10
        assert abs(w[1]) == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-10)

    def test_generalized_identity(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(1, 4))
            phi = rand_pd(rng, n)
            r = rand_pd(rng, n)
            lam, w = pencil_max_eig(phi, r)
            assert np.allclose(phi @ w, lam * (r @ w), atol=1e-8)
            assert w @ r @ w == pytest.approx(1.0, abs=1e-12)

    def test_matches_grid_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            n = int(rng.integers(1, 3))
            phi = rand_pd(rng, n)
            r = rand_pd(rng, n)
            lam, _ = pencil_max_eig(phi, r)
            assert lam == pytest.approx(grid_pencil_max(phi, r), abs=1e-4)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            pencil_max_eig(np.eye(2), np.eye(3))


class TestLyapSolve:
    def test_scalar(self):
        assert lyap_solve([[-1.0]], [[-2.0]]) == pytest.approx(np.array([[1.0]]))

    def test_decoupled_diagonal(self):
        q = lyap_solve(np.diag([-1.0, -2.0]), -np.eye(2))
        assert np.allclose(q, np.diag([0.5, 0.25]), atol=1e-12)

    def test_boundary_value_from_saturated_vertex(self):
        # 2 a q = c with a = -0.3 and c = -1/0.6 gives q = 1/0.36.
        q = lyap_solve([[-0.3]], [[-1.0 / 0.6]])
        assert q[0, 0] == pytest.approx(1.0 / 0.36, abs=1e-10)

    def test_residual_bound_on_random_stable(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            a = -rand_pd(rng, n) + 0.2 * rng.normal(size=(n, n))
            if np.max(np.linalg.eigvals(a).real) >= -1e-3:
                continue
            c = -rand_pd(rng, n)
            q = lyap_solve(a, c)
            resid = np.linalg.norm(a @ q + q @ a.T - c)
            assert resid <= 1e-9 * (1.0 + np.linalg.norm(c))
            assert np.allclose(q, q.T)

    def test_singular_pair_rejected(self):
        # a = 0 makes the vectorized operator singular
        with pytest.raises(SingularLyapunov):
            lyap_solve([[0.0]], [[-1.0]])


class TestDetAndInverse:
    def test_identity(self):
        det, inv = det_and_inverse(np.eye(3))
        assert det == pytest.approx(1.0)
        assert np.allclose(inv, np.eye(3))

    def test_diagonal(self):
        det, inv = det_and_inverse(np.diag([2.0, 3.0]))
        assert det == pytest.approx(6.0)
        assert np.allclose(inv, np.diag([0.5, 1.0 / 3.0]))

    def test_permutation_sign(self):
        det, _ = det_and_inverse(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert det == pytest.approx(-1.0)

    def test_random_multiply_back(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            s = rand_pd(rng, n) + rng.normal(size=(n, n))
            det, inv = det_and_inverse(s)
            assert np.allclose(s @ inv, np.eye(n), atol=1e-9)
            assert det == pytest.approx(np.linalg.det(s), rel=1e-8)

    def test_singular_rejected(self):
        with pytest.raises(SingularMatrix):
            det_and_inverse([[1.0, 1.0], [1.0, 1.0]])


class TestPivotColumns:
    def test_full_rank_wide(self):
        assert pivot_columns([[1.0, 1.0]]) == [0]

    def test_skips_zero_column(self):
        assert pivot_columns([[0.0, 1.0, 1.0], [0.0, 0.0, 1.0]]) == [1, 2]

    def test_rank_deficient(self):
        assert pivot_columns([[1.0, 1.0], [1.0, 1.0]]) == [0]


class TestGoldenSection:
    def test_quadratic(self):
        x, fx = golden_section_min(lambda t: (t - 1.3) ** 2 + 2.0, 0.0, 5.0)
        assert x == pytest.approx(1.3, abs=1e-7)
        assert fx == pytest.approx(2.0, abs=1e-12)

    def test_scalar_boundary_det(self):
        # 1 / (alpha (1.2 - alpha)) has its minimum at alpha = 0.6
        x, fx = golden_section_min(lambda a: 1.0 / (a * (1.2 - a)), 1e-6, 1.2 - 1e-6)
        assert x == pytest.approx(0.6, abs=1e-7)
        assert fx == pytest.approx(1.0 / 0.36, abs=1e-9)

    def test_empty_bracket(self):
        with pytest.raises(ValueError):
            golden_section_min(lambda t: t, 1.0, 1.0)

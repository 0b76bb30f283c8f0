"""Stabilizability decision for ellipsoid-bounded demand and control.

The question "can every admissible demand be matched by an admissible
control" reduces to a max-min problem over the demand ellipsoid, whose
value is the largest generalized eigenvalue of the pencil (Phi, R_w)
with Phi = H^T R_u H built from a basis split of B.  The system is
stabilizable iff that value is strictly below one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import RankDeficientB, UnsupportedDimension
from .model import Network

MARGINAL_BAND = 1e-12


@dataclass(frozen=True)
class BasisSplit:
    """Split of B into an invertible basis block and the remaining columns.

    order holds the original column index of each split coordinate:
    the first n entries are the basis columns, the rest the free ones.
    """

    basis_indices: tuple[int, ...]
    basis: np.ndarray
    nonbasis: np.ndarray
    order: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def m(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class StabilizabilityReport:
    stabilizable: bool
    verdict: str  # "stabilizable" | "marginal" | "not_stabilizable"
    lambda_max: float
    w_star: np.ndarray
    value: float
    k_hat: float


def split_basis(network: Network) -> BasisSplit:
    """Pick the leftmost n independent columns of B as the basis block.

    Deterministic: left-to-right pivoted elimination.
    """
    b = network.B
    n, m = network.n, network.m
    pivots = numerics.pivot_columns(b)
    if len(pivots) != n:
        raise RankDeficientB(f"B has rank {len(pivots)}, expected {n}")
    free = [j for j in range(m) if j not in pivots]
    return BasisSplit(
        basis_indices=tuple(pivots),
        basis=b[:, pivots].copy(),
        nonbasis=b[:, free].copy(),
        order=tuple(pivots + free),
    )


def _permuted_quadratic(split: BasisSplit, r_u: np.ndarray) -> np.ndarray:
    """Control-effort quadratic form expressed in split coordinates."""
    order = list(split.order)
    return r_u[np.ix_(order, order)]


def best_response_matrix(split: BasisSplit, r_u) -> np.ndarray:
    """Matrix M with u_free = -M w minimizing control effort for demand w.

    Stationarity of the effort quadratic after eliminating the basis
    components through B u = w gives the closed form below.  Returns the
    empty (0 x n) matrix when there are no free components.
    """
    r_u = numerics.require_symmetric(r_u, "R_u")
    n, m = split.n, split.m
    if m == n:
        return np.zeros((0, n))
    r_split = _permuted_quadratic(split, r_u)
    binv_n = np.linalg.solve(split.basis, split.nonbasis)
    binv = np.linalg.solve(split.basis, np.eye(n))
    jac = np.vstack([-binv_n, np.eye(m - n)])
    base = np.vstack([binv, np.zeros((m - n, n))])
    return np.linalg.solve(jac.T @ r_split @ jac, jac.T @ r_split @ base)


def gain_matrix(split: BasisSplit, m_best: np.ndarray) -> np.ndarray:
    """Right inverse H of B routing demand through the best response.

    Stacks the basis and free blocks in split order, then permutes the
    rows back to the original control ordering so that B @ H = I.
    """
    n, m = split.n, split.m
    binv = np.linalg.solve(split.basis, np.eye(n))
    binv_n = np.linalg.solve(split.basis, split.nonbasis)
    h_split = np.vstack([binv + binv_n @ m_best, -m_best])
    h = np.empty((m, n))
    h[list(split.order), :] = h_split
    return h


def phi_matrix(h, r_u) -> np.ndarray:
    """Effort quadratic form H^T R_u H of the best-response control."""
    h = np.asarray(h, dtype=float)
    r_u = numerics.require_symmetric(r_u, "R_u")
    phi = h.T @ r_u @ h
    return 0.5 * (phi + phi.T)


def decide_stabilizable(phi, r_w) -> StabilizabilityReport:
    """Necessary and sufficient test: pencil maximum of (Phi, R_w) below one.

    Strictness is enforced with a 1e-12 margin; values within the margin
    of one are reported as "marginal".
    """
    lam, w_star = numerics.pencil_max_eig(phi, r_w, names=("Phi", "R_w"))
    value = float(w_star @ np.asarray(phi, dtype=float) @ w_star)
    if lam < 1.0 - MARGINAL_BAND:
        verdict = "stabilizable"
    elif lam <= 1.0 + MARGINAL_BAND:
        verdict = "marginal"
    else:
        verdict = "not_stabilizable"
    return StabilizabilityReport(
        stabilizable=verdict == "stabilizable",
        verdict=verdict,
        lambda_max=lam,
        w_star=w_star,
        value=value,
        k_hat=1.0 / np.sqrt(value),
    )


def oracle_minmax(network: Network, r_u, r_w, grid_resolution: int = 10_000) -> float:
    """Brute-force value of the max-min inclusion problem (n <= 2 only).

    Independent of the closed-form best response: sweeps a grid over the
    demand-ellipsoid boundary and minimizes the effort over the free
    control components by Newton descent with finite-difference
    derivatives, started from zero.  Desk-scale validation tool.
    """
    n, m = network.n, network.m
    if n > 2:
        raise UnsupportedDimension(f"oracle supports n <= 2, got n = {n}")
    r_u = numerics.require_symmetric(r_u, "R_u")
    r_w = numerics.require_symmetric(r_w, "R_w")
    split = split_basis(network)
    r_split = _permuted_quadratic(split, r_u)
    binv = np.linalg.solve(split.basis, np.eye(n))
    binv_n = np.linalg.solve(split.basis, split.nonbasis)

    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        angles = np.linspace(0.0, 2.0 * np.pi, grid_resolution, endpoint=False)
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    scales = np.sqrt(np.einsum("ij,jk,ik->i", dirs, r_w, dirs))
    w_grid = dirs / scales[:, None]

    d = m - n

    def effort(w_batch, u_free):
        basis_part = w_batch @ binv.T - u_free @ binv_n.T
        full = np.hstack([basis_part, u_free])
        return np.einsum("ij,jk,ik->i", full, r_split, full)

    if d == 0:
        return float(np.max(effort(w_grid, np.zeros((w_grid.shape[0], 0)))))

    # Finite-difference gradient and Hessian; the effort is quadratic in
    # the free components, so one Newton step from zero is exact and two
    # polish steps absorb roundoff.
    h_step = 1e-4
    u = np.zeros((w_grid.shape[0], d))

    def gradient(u_free):
        g = np.empty_like(u_free)
        for idx in range(d):
            e = np.zeros(d)
            e[idx] = h_step
            g[:, idx] = (
                effort(w_grid, u_free + e) - effort(w_grid, u_free - e)
            ) / (2.0 * h_step)
        return g

    w_probe = w_grid[:1]
    u_probe = np.zeros((1, d))
    hess = np.empty((d, d))
    f0 = effort(w_probe, u_probe)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h_step
        for j in range(i, d):
            ej = np.zeros(d)
            ej[j] = h_step
            fij = effort(w_probe, u_probe + ei + ej)
            fi = effort(w_probe, u_probe + ei)
            fj = effort(w_probe, u_probe + ej)
            hess[i, j] = hess[j, i] = ((fij - fi - fj + f0) / h_step**2).item()

    hess_inv = np.linalg.inv(hess)
    for _ in range(3):
        u = u - gradient(u) @ hess_inv.T
    return float(np.max(effort(w_grid, u)))

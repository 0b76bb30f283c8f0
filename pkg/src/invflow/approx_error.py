"""Minimum-volume invariant ellipsoids of vertex dynamics and their gap.

For a stable vertex matrix A the smallest invariant ellipsoid compatible
with the vertex LMI is found on the LMI boundary: for each multiplier
alpha the boundary equation is a Lyapunov equation, and a scalar search
over alpha minimizes the determinant.  Comparing the ellipsoids of the
unsaturated and fully saturated vertices quantifies how much the
saturation envelope inflates the certified target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import NotPositiveDefinite, SingularLyapunov, UnstableVertex


@dataclass(frozen=True)
class MinDetResult:
    """Boundary solution of the minimum-determinant invariant ellipsoid.

    In the scalar case the boundary search is exact; in the matrix case
    the result is a feasible boundary candidate, not a proven global
    minimizer, and reports flag it as such.
    """

    Q: np.ndarray
    alpha: float
    det_Q: float
    boundary_residual: float


def min_det_invariant_ellipsoid(a, r_w) -> MinDetResult:
    """Smallest-determinant Q on the boundary of the vertex LMI for A.

    Solves (A + (alpha/2) I) Q + Q (A + (alpha/2) I)^T = -(1/alpha) R_w^-1
    for each alpha and minimizes det(Q) by golden-section search over the
    stability bracket.  Raises UnstableVertex when A has an eigenvalue
    with nonnegative real part (no invariant ellipsoid exists).
    """
    a = numerics.as_matrix(np.atleast_2d(a), "A")
    r_w = numerics.require_symmetric(np.atleast_2d(r_w), "R_w")
    n = a.shape[0]
    spectral_abscissa = float(np.max(np.linalg.eigvals(a).real))
    if spectral_abscissa >= 0.0:
        raise UnstableVertex(
            f"vertex matrix has an eigenvalue with real part {spectral_abscissa:.6g} >= 0"
        )
    rw_inv = np.linalg.solve(r_w, np.eye(n))
    lo = 1e-6
    hi = 2.0 * abs(spectral_abscissa) * (1.0 - 1e-6)
    if hi <= lo:
        raise UnstableVertex("stability margin too small for the multiplier bracket")

    def boundary_q(alpha: float) -> np.ndarray:
        shifted = a + 0.5 * alpha * np.eye(n)
        return numerics.lyap_solve(shifted, -rw_inv / alpha)

    def objective(alpha: float) -> float:
        try:
            q = boundary_q(alpha)
            numerics.cholesky(q, "Q")
        except (NotPositiveDefinite, SingularLyapunov):
            return float("inf")
        return numerics.det_and_inverse(q)[0]

    alpha, det_q = numerics.golden_section_min(objective, lo, hi, tol=1e-8)
    q = boundary_q(alpha)
    block = q @ a.T + a @ q + alpha * q + rw_inv / alpha
    return MinDetResult(
        Q=q,
        alpha=float(alpha),
        det_Q=float(det_q),
        boundary_residual=float(np.linalg.norm(block)),
    )


def approximation_error(q_under, q_over) -> float:
    """Relative volume gap (det(Q_over^-1) - det(Q_under^-1)) / det(Q_under^-1).

    Q_under is the invariant ellipsoid of the unsaturated vertex, Q_over
    the one of the fully saturated vertex.  Determinants of the inverses
    are taken as reciprocals to avoid forming explicit inverses.
    """
    det_under = numerics.det_and_inverse(np.atleast_2d(np.asarray(q_under, dtype=float)))[0]
    det_over = numerics.det_and_inverse(np.atleast_2d(np.asarray(q_over, dtype=float)))[0]
    inv_under = 1.0 / det_under
    inv_over = 1.0 / det_over
    return (inv_over - inv_under) / inv_under


def error_vs_target(p, q_over) -> float:
    """Volume gap between the chosen target and the saturated-vertex ellipsoid.

    Computes (det(P) - det(Q_over^-1)) / det(Q_over^-1): how much larger
    the certified invariant set of the fully saturated vertex is than the
    target {x : x^T P x <= 1} it must enclose.
    """
    det_p = numerics.det_and_inverse(np.atleast_2d(np.asarray(p, dtype=float)))[0]
    det_over = numerics.det_and_inverse(np.atleast_2d(np.asarray(q_over, dtype=float)))[0]
    inv_over = 1.0 / det_over
    return (det_p - inv_over) / inv_over

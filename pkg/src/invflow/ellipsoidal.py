"""Certificates and the saturated feedback law for ellipsoidal control bounds.

Convergence into the target set under the gain family u = -k H x rests on
two scalar conditions: the gain must dominate the worst demand direction
(k^2 at least the pencil maximum of (P, R_w)) and, for the purely linear
law, the control ellipsoid must not be exceeded anywhere on the initial
sublevel set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import numerics

DEFAULT_VERDICT_TOL = 1e-10


@dataclass(frozen=True)
class EllipsoidalCertificate:
    """Gain admissibility summary for a given initial level xi.

    linear_ok: the linear law u = -k H x is feasible and convergent from
        the whole sublevel set of level xi.
    saturated_ok: the saturated law converges from any initial state
        (gain condition k^2 >= k_min_sq).
    pi_inside_linear_region: the target set lies inside the region where
        the law is linear (k^2 * lambda_max(P^-1 Phi) <= 1); the
        saturated-law argument relies on it.
    """

    k: float
    k_min_sq: float
    xi_max: float
    linear_ok: bool
    saturated_ok: bool
    pi_inside_linear_region: bool


def decrease_condition(x, p, r_w, k: float) -> bool:
    """Pointwise test that the Lyapunov derivative is negative at x.

    Evaluates the strict quartic inequality
    k^2 (x^T P x)^2 - x^T P R_w^-1 P x > 0, which holds iff the worst
    admissible demand cannot stop the decrease of x^T P x at x under the
    unconstrained linear law.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = numerics.require_symmetric(p, "P")
    r_w = numerics.require_symmetric(r_w, "R_w")
    y = p @ x
    value = k**2 * float(x @ y) ** 2 - float(y @ np.linalg.solve(r_w, y))
    return value > 0.0


def gain_bounds(
    p, r_w, phi, xi: float, k: float | None = None, warn: bool = True
) -> EllipsoidalCertificate:
    """Admissibility certificate for the gain k (minimal admissible if omitted).

    k_min_sq is the pencil maximum of (P, R_w); the linear law needs in
    addition k^2 * xi * lambda_max(P^-1 Phi) <= 1, i.e. the control
    ellipsoid is respected on the whole initial sublevel set.
    """
    k_min_sq, _ = numerics.pencil_max_eig(p, r_w, names=("P", "R_w"))
    lam_phi, _ = numerics.pencil_max_eig(phi, p, names=("Phi", "P"))
    if k is None:
        k2 = k_min_sq
        k = float(np.sqrt(k_min_sq))
    else:
        k2 = k * k
    xi_max = 1.0 / (k2 * lam_phi)
    # boundary cases (k^2 exactly at the pencil maximum, xi exactly at
    # the level cap) are admissible; a 1e-12 relative slack absorbs the
    # roundoff of the pencil computation without moving the thresholds
    saturated_ok = k2 >= k_min_sq * (1.0 - 1e-12)
    linear_ok = saturated_ok and (k2 * xi * lam_phi <= 1.0 + 1e-12)
    pi_inside = k2 * lam_phi <= 1.0 + 1e-12
    if not pi_inside and warn:
        warnings.warn(
            "target set is not inside the linear region of the saturated law "
            "(k^2 * lambda_max(P^-1 Phi) > 1); the saturated certificate "
            "relies on that containment",
            stacklevel=2,
        )
    return EllipsoidalCertificate(
        k=float(k),
        k_min_sq=float(k_min_sq),
        xi_max=float(xi_max),
        linear_ok=bool(linear_ok),
        saturated_ok=bool(saturated_ok),
        pi_inside_linear_region=bool(pi_inside),
    )


def saturated_control(x, k: float, h, r_u) -> np.ndarray:
    """Saturated linear state feedback for an ellipsoidal control bound.

    Applies u = -k H x while that control is admissible and otherwise
    scales H x onto the control-ellipsoid boundary.  The two branches
    agree on the switching surface, so the law is continuous, and the
    output always satisfies u^T R_u u <= 1.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = np.asarray(h, dtype=float)
    r_u = np.asarray(r_u, dtype=float)
    hx = h @ x
    effort = float(hx @ r_u @ hx)
    if k**2 * effort <= 1.0:
        return -k * hx
    return -hx / np.sqrt(effort)


def gain_matrix_inequality(p, r_w, k: float, tol: float = DEFAULT_VERDICT_TOL) -> bool:
    """Check the matrix inequality (2k - 1) P - P R_w^-1 P >= 0.

    A sufficient condition on the target matrix implied by the gain
    condition; exposed because the same inequality pattern drives the
    box-bound analysis.
    """
    p = numerics.require_symmetric(p, "P")
    r_w = numerics.require_symmetric(r_w, "R_w")
    mat = (2.0 * k - 1.0) * p - p @ np.linalg.solve(r_w, p)
    return float(numerics.sym_eig(mat).values[0]) >= -tol


def contains_convergence_ball(p, r_w, k: float, tol: float = DEFAULT_VERDICT_TOL) -> bool:
    """True when the target set contains {x : k^2 x^T R_w x <= 1}.

    The closed loop converges into that demand-scaled ball, so a target
    with P - k^2 R_w <= 0 is guaranteed to be reached.
    """
    p = numerics.require_symmetric(p, "P")
    r_w = numerics.require_symmetric(r_w, "R_w")
    mat = p - k**2 * r_w
    return float(numerics.sym_eig(mat).values[-1]) <= tol

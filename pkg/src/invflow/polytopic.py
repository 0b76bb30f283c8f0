"""Box-bounded controls: saturation degrees and the vertex-matrix embedding.

With componentwise saturation the closed loop can be rewritten as a
time-varying linear system whose matrix stays inside the convex hull of
2^m vertex matrices, one per extreme saturation pattern.  Convergence is
then certified by a common scalar multiplier making every vertex LMI
negative definite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import AlphaNonPositive, OutsideEnvelope, VertexExplosion
from .model import BoxBound, Network

DEFAULT_VERDICT_TOL = 1e-10

VERTEX_CAP = 20  # refuse 2^m enumeration beyond this many controls

SATURATION_EDGE = 1e-9  # components with theta below 1 - this count as saturated


@dataclass(frozen=True)
class PolytopicEmbedding:
    """Vertex matrices of the saturated closed loop over a state region.

    gammas[j] is the j-th extreme saturation pattern, ordered by binary
    counting with bit i (least significant = control 0) selecting
    theta_lower[i] instead of 1.  A_list[j] = -B k diag(gammas[j]) H.
    """

    k: float
    H: np.ndarray
    B: np.ndarray
    theta_lower: np.ndarray
    psi_theta: np.ndarray
    gammas: np.ndarray
    A_list: np.ndarray

    @property
    def vertex_count(self) -> int:
        return self.gammas.shape[0]

    @property
    def A_unsaturated(self) -> np.ndarray:
        """Vertex with no saturation active (pattern of all ones)."""
        return self.A_list[0]

    @property
    def A_saturated(self) -> np.ndarray:
        """Vertex with every control at its lowest saturation degree."""
        return self.A_list[-1]


@dataclass(frozen=True)
class VertexLMICertificate:
    feasible: bool
    alpha_star: float
    worst_eig: float


@dataclass(frozen=True)
class RegionCheck:
    samples: int
    passed: int

    @property
    def fraction(self) -> float:
        return self.passed / self.samples if self.samples else float("nan")


def saturated_control_box(x, k: float, h, box: BoxBound) -> np.ndarray:
    """Componentwise clamp of -k H x to the box bounds."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = np.asarray(h, dtype=float)
    return np.clip(-k * (h @ x), box.lower, box.upper)


def degree_of_saturation(x, k: float, h, box: BoxBound) -> np.ndarray:
    """Per-component ratio theta with theta_i * (-k H_i x) = sat(-k H_i x).

    Equals 1 where the raw control is inside the box and lies in (0, 1)
    where it is clamped (the clamped value shares the sign of the raw
    one because the box contains 0 in its interior).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = np.asarray(h, dtype=float)
    raw = -k * (h @ x)
    theta = np.ones_like(raw)
    low = raw < box.lower
    high = raw > box.upper
    theta[low] = box.lower[low] / raw[low]
    theta[high] = box.upper[high] / raw[high]
    return theta


def theta_lower_bounds(k: float, h, p, xi: float, box: BoxBound) -> np.ndarray:
    """Worst saturation degree of each control over {x : x^T P x <= xi}.

    Closed form: the extreme of |k H_i x| over the sublevel set is
    h_i = k sqrt(xi * H_i P^-1 H_i^T), and the worst clamp ratio against
    each box face follows directly.
    """
    h = np.asarray(h, dtype=float)
    p = numerics.require_symmetric(p, "P")
    q_rows = np.linalg.solve(p, h.T)  # P^-1 H^T
    reach = k * np.sqrt(xi * np.einsum("ij,ji->i", h, q_rows))
    theta = np.ones(h.shape[0])
    for i, hi in enumerate(reach):
        bounds = [1.0]
        if hi > box.upper[i]:
            bounds.append(box.upper[i] / hi)
        if hi > -box.lower[i]:
            bounds.append(-box.lower[i] / hi)
        theta[i] = min(bounds)
    return theta


def enumerate_embedding(k: float, h, theta_lower, network: Network) -> PolytopicEmbedding:
    """All 2^m extreme saturation patterns and their vertex matrices."""
    h = np.asarray(h, dtype=float)
    theta_lower = np.atleast_1d(np.asarray(theta_lower, dtype=float))
    b = network.B
    m = network.m
    if m > VERTEX_CAP:
        raise VertexExplosion(f"2^{m} vertices exceed the enumeration cap 2^{VERTEX_CAP}")
    index = np.arange(2**m)
    bits = (index[:, None] >> np.arange(m)[None, :]) & 1
    gammas = np.where(bits == 1, theta_lower[None, :], 1.0)
    scaled = gammas[:, :, None] * h[None, :, :]
    a_list = -k * np.einsum("nm,jmi->jni", b, scaled)
    return PolytopicEmbedding(
        k=float(k),
        H=h,
        B=b,
        theta_lower=theta_lower,
        psi_theta=1.0 / theta_lower,
        gammas=gammas,
        A_list=a_list,
    )


def sigma_weights(x, embedding: PolytopicEmbedding, box: BoxBound) -> np.ndarray:
    """Convex weights expressing the current saturation as a vertex mixture.

    Componentwise product interpolation: with
    t_i = (theta_i(x) - theta_lower_i) / (1 - theta_lower_i) the weight
    of vertex j is the product over components of t_i (bit clear) or
    1 - t_i (bit set).  The weights sum to one and reproduce
    diag(theta(x)) exactly, hence (sum_j sigma_j A_j) x = B sat(-kHx).
    """
    theta = degree_of_saturation(x, embedding.k, embedding.H, box)
    lower = embedding.theta_lower
    if np.any(theta < lower - 1e-12):
        raise OutsideEnvelope(
            f"state has saturation degrees {theta} below the envelope {lower}"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(lower < 1.0, (theta - lower) / (1.0 - lower), 1.0)
    t = np.clip(t, 0.0, 1.0)
    m = lower.shape[0]
    index = np.arange(2**m)
    bits = (index[:, None] >> np.arange(m)[None, :]) & 1
    factors = np.where(bits == 1, (1.0 - t)[None, :], t[None, :])
    return factors.prod(axis=1)


def vertex_lmi(q, a, alpha: float, r_w) -> np.ndarray:
    """LMI block Q A^T + A Q + alpha Q + (1/alpha) R_w^-1 for one vertex."""
    if alpha <= 0.0:
        raise AlphaNonPositive(f"alpha must be positive, got {alpha}")
    q = numerics.require_symmetric(q, "Q")
    a = np.asarray(a, dtype=float)
    r_w = numerics.require_symmetric(r_w, "R_w")
    n = q.shape[0]
    mat = q @ a.T + a @ q + alpha * q + np.linalg.solve(r_w, np.eye(n)) / alpha
    return 0.5 * (mat + mat.T)


def certify_vertex_lmis(
    q, embedding: PolytopicEmbedding, r_w, tol: float = DEFAULT_VERDICT_TOL
) -> VertexLMICertificate:
    """Search a common scalar alpha making every vertex LMI negative definite.

    f(alpha) = max_j lambda_max of the j-th block is convex on alpha > 0
    (both alpha Q and R_w^-1 / alpha are matrix-convex there), so a
    golden-section search over (1e-6, alpha_hi] is exact.  Infeasible is
    a valid outcome, reported with the best alpha found.
    """
    q = numerics.require_symmetric(q, "Q")
    r_w = numerics.require_symmetric(r_w, "R_w")

    def worst(alpha: float) -> float:
        return max(
            float(numerics.sym_eig(vertex_lmi(q, a, alpha, r_w)).values[-1])
            for a in embedding.A_list
        )

    drift = max(
        abs(float(numerics.sym_eig(q @ a.T + a @ q).values[0]))
        for a in embedding.A_list
    )
    q_min = float(numerics.sym_eig(q).values[0])
    alpha_hi = 2.0 * drift / q_min + 1.0
    alpha_star, worst_eig = numerics.golden_section_min(worst, 1e-6, alpha_hi, tol=1e-8)
    return VertexLMICertificate(
        feasible=worst_eig < -tol,
        alpha_star=float(alpha_star),
        worst_eig=float(worst_eig),
    )


def negative_eigenpairs(mat, tol: float = DEFAULT_VERDICT_TOL) -> list[tuple[float, np.ndarray]]:
    """Eigenpairs of a symmetric matrix with eigenvalue below -tol."""
    eig = numerics.sym_eig(mat)
    return [
        (float(eig.values[i]), eig.vectors[:, i])
        for i in range(len(eig.values))
        if eig.values[i] < -tol
    ]


def _region_index(theta: np.ndarray) -> int:
    """Saturation pattern of a state as a vertex index (bit set = clamped)."""
    saturated = theta < 1.0 - SATURATION_EDGE
    return int(np.sum(saturated * (1 << np.arange(theta.shape[0]))))


def _envelope_bounding_radius(embedding: PolytopicEmbedding, box: BoxBound) -> float:
    rows = -embedding.k * embedding.H
    extremes = np.maximum(box.upper / embedding.theta_lower,
                          -box.lower / embedding.theta_lower)
    gram = numerics.sym_eig(rows.T @ rows)
    return float(np.linalg.norm(extremes) / np.sqrt(gram.values[0]))


def sampled_span_check(
    embedding: PolytopicEmbedding,
    q,
    r_w,
    alpha: float,
    box: BoxBound,
    samples: int = 200,
    seed: int = 0,
    tol: float = DEFAULT_VERDICT_TOL,
) -> dict[int, RegionCheck]:
    """Sampled falsifier of the per-region span-inclusion condition.

    Draws states uniformly from the saturation envelope, assigns each to
    the region of its saturation pattern and tests the distance to the
    span of the region's negative LMI eigenvectors.  A fraction below one
    certifies the condition fails; a fraction of one is only sampled
    evidence, never a proof.
    """
    q = numerics.require_symmetric(q, "Q")
    r_w = numerics.require_symmetric(r_w, "R_w")
    n = embedding.B.shape[0]
    spans: dict[int, np.ndarray | None] = {}
    counts: dict[int, list[int]] = {}
    radius = _envelope_bounding_radius(embedding, box)
    rng = np.random.default_rng(seed)
    accepted = 0
    attempts = 0
    max_attempts = 1000 * samples
    while accepted < samples and attempts < max_attempts:
        attempts += 1
        x = rng.uniform(-radius, radius, size=n)
        theta = degree_of_saturation(x, embedding.k, embedding.H, box)
        if np.any(theta < embedding.theta_lower - 1e-12):
            continue
        accepted += 1
        j = _region_index(theta)
        if j not in spans:
            block = vertex_lmi(q, embedding.A_list[j], alpha, r_w)
            pairs = negative_eigenpairs(block, tol=tol)
            spans[j] = np.column_stack([v for _, v in pairs]) if pairs else None
        basis = spans[j]
        if basis is None:
            ok = False
        else:
            dist = np.linalg.norm(x - basis @ (basis.T @ x))
            ok = dist <= 1e-6 * np.linalg.norm(x)
        tally = counts.setdefault(j, [0, 0])
        tally[0] += 1
        tally[1] += int(ok)
    if accepted == 0:
        raise RuntimeError("could not sample the saturation envelope")
    return {j: RegionCheck(samples=c[0], passed=c[1]) for j, c in counts.items()}

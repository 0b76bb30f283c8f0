"""Deterministic closed-loop simulation under three demand generators.

Fixed-step classical Runge-Kutta integration of dx/dt = B u(x) - w(t, x)
with the demand recomputed at every stage evaluation.  Identical
scenarios (including the demand seed) produce bitwise-identical
trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ellipsoidal import saturated_control
from .errors import NonFiniteState, ZeroState
from .model import BoxBound, EllipsoidBound, Problem
from .polytopic import saturated_control_box

LAWS = ("ellipsoidal-saturated", "box-saturated", "pure-linear")

CONVERGENCE_GRACE_STEPS = 10

MONOTONE_MARGIN = 1e-12
OUTSIDE_BAND = 1e-9


@dataclass(frozen=True)
class WorstCaseDemand:
    """Adversarial demand maximizing the Lyapunov derivative at each state."""

    kind = "worst"


@dataclass(frozen=True)
class ConstantDemand:
    w0: np.ndarray
    kind = "constant"

    def __post_init__(self):
        object.__setattr__(self, "w0", np.atleast_1d(np.array(self.w0, dtype=float)))


@dataclass(frozen=True)
class BoundaryRandomDemand:
    """Uniform directions on the demand-ellipsoid boundary, held piecewise.

    A fresh direction is drawn every `hold` seconds, deterministically
    from the seed and the segment index.
    """

    seed: int = 0
    hold: float = 0.1
    kind = "random"


DemandModel = WorstCaseDemand | ConstantDemand | BoundaryRandomDemand


@dataclass(frozen=True)
class Scenario:
    problem: Problem
    law: str
    k: float
    H: np.ndarray
    demand: DemandModel
    dt: float = 1e-3
    t_max: float = 50.0


@dataclass
class Trajectory:
    """Recorded closed-loop run, one row per integration step."""

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    w: np.ndarray
    v: np.ndarray
    converged_at: float | None
    v_monotone_outside: bool
    control_feasible: bool
    demand_feasible: bool

    @property
    def steps(self) -> int:
        return len(self.t) - 1

    def samples(self):
        """Iterate (t, x, u, w, V) tuples."""
        for i in range(len(self.t)):
            yield self.t[i], self.x[i], self.u[i], self.w[i], self.v[i]


def worst_demand(x, p, r_w) -> np.ndarray:
    """Boundary demand maximizing the growth of x^T P x.

    w = -R_w^-1 P x / sqrt(x^T P R_w^-1 P x); satisfies w^T R_w w = 1.
    Raises ZeroState at x = 0, where every boundary demand is equally bad.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(p, dtype=float)) @ x
    z = np.linalg.solve(np.atleast_2d(np.asarray(r_w, dtype=float)), y)
    quad = float(y @ z)
    if quad <= 0.0:
        raise ZeroState("worst demand is undefined at x = 0")
    return -z / np.sqrt(quad)


def _control_law(scenario: Scenario):
    problem = scenario.problem
    k, h = scenario.k, scenario.H
    control = problem.control
    if scenario.law == "ellipsoidal-saturated":
        if not isinstance(control, EllipsoidBound):
            raise ValueError("ellipsoidal-saturated law needs an ellipsoid control bound")
        r_u = control.R_u
        return lambda x: saturated_control(x, k, h, r_u)
    if scenario.law == "box-saturated":
        if not isinstance(control, BoxBound):
            raise ValueError("box-saturated law needs a box control bound")
        return lambda x: saturated_control_box(x, k, h, control)
    if scenario.law == "pure-linear":
        return lambda x: -k * (h @ x)
    raise ValueError(f"unknown law {scenario.law!r}; expected one of {LAWS}")


def _demand_generator(scenario: Scenario):
    problem = scenario.problem
    r_w = problem.demand.R_w
    p = problem.target.P
    n = problem.network.n
    demand = scenario.demand
    if isinstance(demand, WorstCaseDemand):
        rw_inv_p = np.linalg.solve(r_w, p)
        p_rw_p = p @ rw_inv_p

        def worst(t, x):
            quad = float(x @ p_rw_p @ x)
            if quad <= 0.0:
                return np.zeros(n)
            return -(rw_inv_p @ x) / np.sqrt(quad)

        return worst
    if isinstance(demand, ConstantDemand):
        w0 = demand.w0
        if w0.shape != (n,):
            raise ValueError(f"w0 must have length {n}")
        if float(w0 @ r_w @ w0) > 1.0 + 1e-12:
            raise ValueError("constant demand lies outside the demand ellipsoid")
        return lambda t, x: w0
    if isinstance(demand, BoundaryRandomDemand):
        if demand.hold <= 0.0:
            raise ValueError("hold interval must be positive")
        cache: dict[int, np.ndarray] = {}

        def random_boundary(t, x):
            segment = int(np.floor(t / demand.hold + 1e-12))
            w = cache.get(segment)
            if w is None:
                rng = np.random.default_rng(
                    np.random.SeedSequence(entropy=demand.seed, spawn_key=(segment,))
                )
                direction = rng.standard_normal(n)
                while np.linalg.norm(direction) == 0.0:
                    direction = rng.standard_normal(n)
                w = direction / np.sqrt(direction @ r_w @ direction)
                cache[segment] = w
            return w

        return random_boundary
    raise TypeError(f"unknown demand model {type(demand).__name__}")


def run(scenario: Scenario) -> Trajectory:
    """Integrate the closed loop and record every step.

    Stops at t_max or a short grace period after the state enters the
    target set.  Certificate preconditions are deliberately not checked,
    so uncertified regimes can be explored; the returned flags report
    what actually happened.
    """
    if scenario.dt <= 0.0:
        raise ValueError("dt must be positive")
    if scenario.t_max < scenario.dt:
        raise ValueError("t_max must be at least dt")
    problem = scenario.problem
    initial = problem.initial
    if initial is None or initial.x0 is None:
        raise ValueError("simulation needs a concrete initial state x0")

    b = problem.network.B
    p = problem.target.P
    control = _control_law(scenario)
    demand = _demand_generator(scenario)

    def deriv(t, x):
        return b @ control(x) - demand(t, x)

    dt = scenario.dt
    steps = int(round(scenario.t_max / dt))
    ts, xs, us, ws, vs = [], [], [], [], []
    converged_at = None
    grace = None
    x = initial.x0.copy()
    for i in range(steps + 1):
        t = i * dt
        u = control(x)
        w = demand(t, x)
        v = float(x @ p @ x)
        ts.append(t)
        xs.append(x.copy())
        us.append(np.atleast_1d(u))
        ws.append(np.atleast_1d(w))
        vs.append(v)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(
                f"state became non-finite at t = {t}",
                trajectory=_assemble(scenario, ts, xs, us, ws, vs, converged_at),
            )
        if converged_at is None and v <= 1.0:
            converged_at = t
            grace = CONVERGENCE_GRACE_STEPS
        if grace is not None:
            if grace == 0:
                break
            grace -= 1
        if i == steps:
            break
        k1 = deriv(t, x)
        k2 = deriv(t + 0.5 * dt, x + 0.5 * dt * k1)
        k3 = deriv(t + 0.5 * dt, x + 0.5 * dt * k2)
        k4 = deriv(t + dt, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _assemble(scenario, ts, xs, us, ws, vs, converged_at)


def _assemble(scenario, ts, xs, us, ws, vs, converged_at) -> Trajectory:
    t = np.array(ts)
    x = np.array(xs)
    u = np.array(us)
    w = np.array(ws)
    v = np.array(vs)

    monotone = True
    for i in range(len(v) - 1):
        if v[i] > 1.0 + OUTSIDE_BAND and v[i] - v[i + 1] <= MONOTONE_MARGIN:
            monotone = False
            break

    control = scenario.problem.control
    if isinstance(control, EllipsoidBound):
        efforts = np.einsum("ij,jk,ik->i", u, control.R_u, u)
        control_ok = bool(np.all(efforts <= 1.0 + 1e-9))
    else:
        control_ok = bool(
            np.all(u >= control.lower - 1e-9) and np.all(u <= control.upper + 1e-9)
        )
    r_w = scenario.problem.demand.R_w
    demand_norms = np.einsum("ij,jk,ik->i", w, r_w, w)
    demand_ok = bool(np.all(demand_norms <= 1.0 + 1e-9))

    return Trajectory(
        t=t,
        x=x,
        u=u,
        w=w,
        v=v,
        converged_at=converged_at,
        v_monotone_outside=monotone,
        control_feasible=control_ok,
        demand_feasible=demand_ok,
    )

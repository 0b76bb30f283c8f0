"""Problem-definition types for the flow-network control problem.

A problem bundles the network matrix B, the demand ellipsoid, the control
bound (ellipsoid or box), the target ellipsoid and the initial condition.
All types are immutable value objects; `validate` checks every invariant
and returns an enriched problem with derived fields filled in.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import numerics
from .errors import BoxExcludesZero, NotPositiveDefinite, RankDeficientB, XiBelowOne


@dataclass(frozen=True)
class Network:
    """Controlled process matrix B (n buffers x m controls), full row rank."""

    B: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "B", numerics.as_matrix(self.B, "B"))

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class DemandBound:
    """Demand ellipsoid {w : w^T R_w w <= 1}."""

    R_w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "R_w", numerics.as_matrix(self.R_w, "R_w"))


@dataclass(frozen=True)
class EllipsoidBound:
    """Control ellipsoid {u : u^T R_u u <= 1}."""

    R_u: np.ndarray
    kind = "ellipsoid"

    def __post_init__(self):
        object.__setattr__(self, "R_u", numerics.as_matrix(self.R_u, "R_u"))


@dataclass(frozen=True)
class BoxBound:
    """Componentwise control bounds lower <= u <= upper, with 0 interior."""

    lower: np.ndarray
    upper: np.ndarray
    kind = "box"

    def __post_init__(self):
        object.__setattr__(self, "lower", np.atleast_1d(np.array(self.lower, dtype=float)))
        object.__setattr__(self, "upper", np.atleast_1d(np.array(self.upper, dtype=float)))


ControlBound = EllipsoidBound | BoxBound


@dataclass(frozen=True)
class TargetSet:
    """Target ellipsoid {x : x^T P x <= 1}; Q = P^-1 is filled by validate."""

    P: np.ndarray
    Q: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "P", numerics.as_matrix(self.P, "P"))


@dataclass(frozen=True)
class InitialSet:
    """Initial condition: a concrete state x0 or a level xi >= 1.

    xi is the level of the sublevel set {x : x^T P x <= xi} that must
    contain the initial state; with x0 given, xi is derived as x0^T P x0.
    """

    x0: np.ndarray | None = None
    xi: float | None = None

    def __post_init__(self):
        if self.x0 is not None:
            object.__setattr__(self, "x0", np.atleast_1d(np.array(self.x0, dtype=float)))


@dataclass(frozen=True)
class Problem:
    """A full problem instance.  Derived fields are set by `validate`."""

    network: Network
    demand: DemandBound
    control: ControlBound
    target: TargetSet
    initial: InitialSet | None = None
    xi: float | None = None
    already_in_target: bool = False


def validate(problem: Problem) -> Problem:
    """Check every type invariant and return the problem with derived fields.

    Raises a structured error naming the violated invariant.  Validation
    is idempotent and has no side effects.
    """
    net = problem.network
    n, m = net.n, net.m
    if m < n:
        raise RankDeficientB(f"B is {n}x{m}; need at least as many controls as buffers")
    if len(numerics.pivot_columns(net.B)) != n:
        raise RankDeficientB(f"B has rank below {n}")

    rw = numerics.require_symmetric(problem.demand.R_w, "R_w")
    if rw.shape[0] != n:
        raise ValueError(f"R_w must be {n}x{n}, got {rw.shape}")
    numerics.cholesky(rw, "R_w")

    control = problem.control
    if isinstance(control, EllipsoidBound):
        ru = numerics.require_symmetric(control.R_u, "R_u")
        if ru.shape[0] != m:
            raise ValueError(f"R_u must be {m}x{m}, got {ru.shape}")
        numerics.cholesky(ru, "R_u")
    elif isinstance(control, BoxBound):
        if control.lower.shape != (m,) or control.upper.shape != (m,):
            raise ValueError(f"box bounds must have length {m}")
        if np.any(control.lower >= 0.0) or np.any(control.upper <= 0.0):
            raise BoxExcludesZero("box bounds must satisfy lower < 0 < upper componentwise")
    else:
        raise TypeError(f"unsupported control bound {type(control).__name__}")

    p = numerics.require_symmetric(problem.target.P, "P")
    if p.shape[0] != n:
        raise ValueError(f"P must be {n}x{n}, got {p.shape}")
    numerics.cholesky(p, "P")
    _, q = numerics.det_and_inverse(p)
    q = 0.5 * (q + q.T)
    if np.linalg.norm(q @ p - np.eye(n)) > 1e-9:
        raise NotPositiveDefinite("P (inverse residual too large)")
    target = TargetSet(P=p, Q=q)

    xi = 1.0
    already_in = False
    initial = problem.initial
    if initial is not None:
        if initial.x0 is not None and initial.xi is not None:
            raise ValueError("give either x0 or xi, not both")
        if initial.x0 is not None:
            x0 = initial.x0
            if x0.shape != (n,):
                raise ValueError(f"x0 must have length {n}")
            xi = float(x0 @ p @ x0)
            already_in = xi < 1.0
        elif initial.xi is not None:
            xi = float(initial.xi)
            if xi < 1.0:
                raise XiBelowOne(f"xi = {xi} is below 1")

    return replace(problem, target=target, xi=xi, already_in_target=already_in)

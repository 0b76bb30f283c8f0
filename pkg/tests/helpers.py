"""Shared helpers for the test suite."""

import numpy as np

from invflow.model import (
    BoxBound,
    DemandBound,
    EllipsoidBound,
    InitialSet,
    Network,
    Problem,
    TargetSet,
    validate,
)


def rand_pd(rng, n, floor=0.1):
    """Random symmetric positive definite matrix G G^T + floor * I."""
    g = rng.normal(size=(n, n))
    return g @ g.T + floor * np.eye(n)


def rand_full_rank(rng, n, m):
    """Random n x m matrix with full row rank (resampled until it is)."""
    from invflow.numerics import pivot_columns

    while True:
        b = rng.normal(size=(n, m))
        if len(pivot_columns(b)) == n:
            return b


def running_example_problem(x0=None, xi=None, p=1.0):
    """The single-buffer, two-control network with the unit demand ellipsoid."""
    initial = None
    if x0 is not None:
        initial = InitialSet(x0=[x0])
    elif xi is not None:
        initial = InitialSet(xi=xi)
    return validate(
        Problem(
            network=Network(B=[[1.0, 1.0]]),
            demand=DemandBound(R_w=[[1.0]]),
            control=EllipsoidBound(R_u=np.eye(2)),
            target=TargetSet(P=[[p]]),
            initial=initial,
        )
    )


def box_example_problem(x0=None, xi=None, p=1.0):
    """Same network with the asymmetric box control bound."""
    initial = None
    if x0 is not None:
        initial = InitialSet(x0=[x0])
    elif xi is not None:
        initial = InitialSet(xi=xi)
    return validate(
        Problem(
            network=Network(B=[[1.0, 1.0]]),
            demand=DemandBound(R_w=[[1.0]]),
            control=BoxBound(lower=[-2.0, -2.0], upper=[3.0, 1.0]),
            target=TargetSet(P=[[p]]),
            initial=initial,
        )
    )


HALF_SPLIT_H = np.array([[0.5], [0.5]])

"""Robust control of multi-inventory flow networks with bounded demand.

Decides stabilizability under ellipsoid-bounded demand, synthesizes
saturated linear state-feedback gains for ellipsoid- or box-bounded
controls, verifies the convergence certificates and simulates the closed
loop under adversarial demand.
"""

from .approx_error import (
    MinDetResult,
    approximation_error,
    error_vs_target,
    min_det_invariant_ellipsoid,
)
from .ellipsoidal import (
    EllipsoidalCertificate,
    contains_convergence_ball,
    decrease_condition,
    gain_bounds,
    gain_matrix_inequality,
    saturated_control,
)
from .model import (
    BoxBound,
    DemandBound,
    EllipsoidBound,
    InitialSet,
    Network,
    Problem,
    TargetSet,
    validate,
)
from .numerics import (
    EigenResult,
    cholesky,
    det_and_inverse,
    golden_section_min,
    lyap_solve,
    pencil_max_eig,
    sym_eig,
)
from .polytopic import (
    PolytopicEmbedding,
    RegionCheck,
    VertexLMICertificate,
    certify_vertex_lmis,
    degree_of_saturation,
    enumerate_embedding,
    negative_eigenpairs,
    sampled_span_check,
    saturated_control_box,
    sigma_weights,
    theta_lower_bounds,
    vertex_lmi,
)
from .simulate import (
    BoundaryRandomDemand,
    ConstantDemand,
    Scenario,
    Trajectory,
    WorstCaseDemand,
    run,
    worst_demand,
)
from .stabilizability import (
    BasisSplit,
    StabilizabilityReport,
    best_response_matrix,
    decide_stabilizable,
    gain_matrix,
    oracle_minmax,
    phi_matrix,
    split_basis,
)

__version__ = "0.1.0"

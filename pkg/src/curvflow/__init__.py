"""curvflow: H^2-conforming finite elements for the regularized level-set
equation of flows by powers of mean curvature, with an explicit-constants
verification harness (parameter conditions, contraction rates, radial
reference solutions, convergence studies)."""

from .conditions import (
    ConditionReport,
    ParameterSet,
    RadiusOverflowError,
    bound_budget,
    contraction_exponents,
    delta_interval,
    nu,
    rho_radius,
    sufficient_conditions,
    wdeg_lower_bound,
)
from .elements import ElementKind
from .fespace import (
    DiscreteField,
    FESpace,
    boundary_corrected_interpolant,
    build_space,
    interpolate,
    interpolation_error,
    inverse_estimate_ratio,
)
from .mesh import (
    Domain,
    Mesh,
    boundary_strip_constant,
    build_boundary_map,
    build_disk_mesh,
    build_interval_mesh,
    load_mesh,
    offset_domain,
    refine,
    save_mesh,
    signed_distance,
)
from .model import FlowRegime, eta, f_eps, f_eps_derivatives, linearized_coeffs
from .oracle import RadialProfile, exact_mcf_arrival, radial_solve, regularization_gap

__version__ = "0.1.0"

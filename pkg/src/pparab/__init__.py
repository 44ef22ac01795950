"""Solver and algebraic certifier for the regularized general p-parabolic flow

    u_t = (|Du|^2 + eps)^(gamma/2) (lap(u) + (p - 2) ilap(u) / (|Du|^2 + eps)).

Submodules: params (ranges and case classification), fields (grids and
derivative bundles), quadform (coefficients, weight selections, uniform
certification), solver (explicit marching and the exact kink solution),
estimates (divergence identities, pointwise combination, integral estimate,
threshold scan), cli (batch commands).
"""

from .errors import BlowupError, BoundaryError, RangeError, ZeroGradientError
from .fields import (
    DerivativeBundle,
    Grid2,
    ScalarField,
    bundle_arrays,
    bundle_from_derivatives,
    derivative_bundle,
    flux_gradient_sq,
    flux_gradient_sq_arrays,
    fundamental_gap,
    fundamental_gap_many,
)
from .params import Params, TheoremCase, range_condition_smooth, theorem_case, validate
from .quadform import (
    CertReport,
    CoefficientSet,
    SymForm2,
    Weights,
    appendix_quadratic,
    appendix_roots,
    certify_uniform,
    coefficient_arrays,
    coefficients,
    lambda_select,
    matrix_M_regularized,
    matrix_M_smooth,
    matrix_N,
    mixed_term_poly,
    one_dim_coefficient,
    region_map,
    region_map_csv,
    weights_case_i,
    weights_case_ii,
    weights_smooth,
    x1x2_bounds,
)
from .rng import SplitMix64
from .solver import (
    SolveConfig,
    Trajectory,
    exact_counterexample,
    pde_residual,
    sine_initial,
    solve,
    stable_dt,
    step,
)
from .estimates import (
    AnalyticFunction,
    CylinderSpec,
    EstimateReport,
    cutoff,
    default_test_functions,
    divergence_structure_residual,
    estimate_report,
    key_inequality_report,
    s_pointwise,
    sobolev_threshold_scan,
)

__version__ = "0.1.0"

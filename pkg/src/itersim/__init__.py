"""Simulation and estimation for iterated stochastic processes Z = X(|Y|).

The package provides the composed Euler scheme and its interpolants, a zoo
of named processes with exact samplers and closed transition laws, Monte
Carlo estimators with deterministic quadrature oracles for the associated
fourth-order PDEs, a statistics harness (variations, density comparison,
coupled strong error, order fitting), and a CSV-emitting CLI.

Hot Euler kernels run through a compiled extension when available and fall
back to a bit-identical pure implementation; see :func:`backend_name` and
:func:`set_backend`.
"""

from __future__ import annotations

from ._engine import backend_name, set_backend
from .errors import ConfigError, ItersimError, NumericsError, UnsupportedOperationError
from .feynman_kac import (
    IbmResidualReport,
    IntertwineReport,
    MonteCarloEstimate,
    QuadratureRule,
    beam_estimate,
    boundary_term_ibm,
    fk_estimate,
    fk_oracle,
    half_derivative_transform,
    ibm_pde_residual,
    ibm_pde_terms,
    intertwine_apply,
    intertwine_check,
    two_sided_fk_estimate,
    write_estimate_csv,
)
from .functions import Bump, GaussianForm, SmoothFunction, bump, gauss, gauss_function, linear, linear_cosh
from .iterated import (
    IteratedPath,
    eval_iterated,
    knot_times,
    simulate_iterated,
    time_changed_value,
    two_sided_sample,
    write_iterated_csv,
)
from .processes import (
    BrownianMotion,
    BrownianWithDrift,
    CauchyProcess,
    OrnsteinUhlenbeck,
    ProcessSpec,
    SquaredBessel,
    Telegraph,
    coefficients_of,
    format_process,
    parse_process,
    sample_terminal,
    transition_cdf,
    transition_density,
)
from .rng import RngStream, derive_stream, path_streams, standard_cauchy, standard_gaussian
from .sde import (
    AffineForm,
    CoefficientField,
    EulerPath,
    euler_path,
    euler_path_from_increments,
    eval_linear,
    eval_step,
    sup_abs,
    write_path_csv,
)
from .stats import (
    DensityComparison,
    ErrorCurve,
    Histogram,
    build_histogram,
    density_compare,
    fit_order,
    strong_error,
    variation_estimate,
    write_density_csv,
    write_error_curve_csv,
    write_histogram_csv,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    "set_backend",
    "ItersimError",
    "ConfigError",
    "NumericsError",
    "UnsupportedOperationError",
    "RngStream",
    "derive_stream",
    "path_streams",
    "standard_gaussian",
    "standard_cauchy",
    "AffineForm",
    "CoefficientField",
    "EulerPath",
    "euler_path",
    "euler_path_from_increments",
    "eval_step",
    "eval_linear",
    "sup_abs",
    "write_path_csv",
    "BrownianMotion",
    "BrownianWithDrift",
    "OrnsteinUhlenbeck",
    "SquaredBessel",
    "Telegraph",
    "CauchyProcess",
    "ProcessSpec",
    "coefficients_of",
    "transition_density",
    "transition_cdf",
    "sample_terminal",
    "parse_process",
    "format_process",
    "GaussianForm",
    "SmoothFunction",
    "Bump",
    "gauss",
    "gauss_function",
    "bump",
    "linear",
    "linear_cosh",
    "IteratedPath",
    "simulate_iterated",
    "knot_times",
    "eval_iterated",
    "two_sided_sample",
    "time_changed_value",
    "write_iterated_csv",
    "MonteCarloEstimate",
    "QuadratureRule",
    "IbmResidualReport",
    "IntertwineReport",
    "fk_estimate",
    "fk_oracle",
    "boundary_term_ibm",
    "ibm_pde_residual",
    "ibm_pde_terms",
    "two_sided_fk_estimate",
    "beam_estimate",
    "intertwine_apply",
    "intertwine_check",
    "half_derivative_transform",
    "write_estimate_csv",
    "Histogram",
    "ErrorCurve",
    "DensityComparison",
    "build_histogram",
    "variation_estimate",
    "density_compare",
    "strong_error",
    "fit_order",
    "write_histogram_csv",
    "write_density_csv",
    "write_error_curve_csv",
]

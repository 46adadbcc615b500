"""meanflow: stochastic perturbations of inviscid flows on the flat torus.

Solve Hopf / 2D Euler base flows, average them over Wiener shifts, and test
the resulting expectation fields against viscous Burgers, Reynolds-type and
Navier-Stokes dynamics with independent oracles.
"""

from .torus import (
    TorusGrid,
    GridError,
    set_fft_workers,
    get_fft_workers,
    to_spectral,
    to_real,
    gradient,
    divergence,
    laplacian,
    curl2d,
    velocity_from_stream,
    leray_project,
    shift_by,
    advect,
    l2_inner,
    l2_norm,
    linf_norm,
    max_divergence,
    evaluate_at,
    FieldEvaluator,
)
from .errors import (
    MeanflowError,
    ConfigurationError,
    DomainError,
    NumericalError,
    EstimationError,
)
from .inviscid import (
    FlowState,
    HopfSolution,
    shock_time,
    hopf_solve,
    flow_map,
    euler_solve,
    euler_pressure,
)
from .brownian import (
    WienerEnsemble,
    sample_wiener,
    sample_diffusion,
    estimate_mean_derivative,
    mean_derivative_of_field,
    field_derivative_rhs,
    build_perturbed_flow,
    PerturbedFlow,
)
from .expectation import (
    ResidualReport,
    smooth_by_expectation,
    fluctuation_field,
    reynolds_stress,
    decompose_expected_advection,
    ito_transport_check,
    burgers_residual,
    reynolds_residual,
    ns_residual,
)
from .ensemble import (
    EnsembleState,
    make_ensemble_state,
    ensemble_mean_shifted,
    ensemble_force,
    step_forced_system,
    run_meanfield_experiment,
)
from .oracles import heat_solve, cole_hopf_burgers, spectral_ns_2d
from .config import ExperimentConfig, load_config
from .scenarios import run_scenario

__all__ = [
    "TorusGrid", "GridError", "set_fft_workers", "get_fft_workers",
    "to_spectral", "to_real", "gradient", "divergence", "laplacian", "curl2d",
    "velocity_from_stream", "leray_project", "shift_by", "advect", "l2_inner",
    "l2_norm", "linf_norm", "max_divergence", "evaluate_at", "FieldEvaluator",
    "MeanflowError", "ConfigurationError", "DomainError", "NumericalError",
    "EstimationError",
    "FlowState", "HopfSolution", "shock_time", "hopf_solve", "flow_map",
    "euler_solve", "euler_pressure",
    "WienerEnsemble", "sample_wiener", "sample_diffusion",
    "estimate_mean_derivative", "mean_derivative_of_field",
    "field_derivative_rhs", "build_perturbed_flow", "PerturbedFlow",
    "ResidualReport", "smooth_by_expectation", "fluctuation_field",
    "reynolds_stress", "decompose_expected_advection", "ito_transport_check",
    "burgers_residual", "reynolds_residual", "ns_residual",
    "EnsembleState", "make_ensemble_state", "ensemble_mean_shifted",
    "ensemble_force", "step_forced_system", "run_meanfield_experiment",
    "heat_solve", "cole_hopf_burgers", "spectral_ns_2d",
    "ExperimentConfig", "load_config", "run_scenario",
]

__version__ = "0.1.0"

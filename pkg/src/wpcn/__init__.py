"""Analytic model, max-min optimizer and Monte-Carlo checks for FDD MU-MISO WPCNs."""

from .montecarlo import (
    TrialStats,
    apply_rvq,
    beamformer,
    generate_channels,
    harvest_and_rates,
    pareto_check,
    run_forward_experiment,
    reference_scenarios,
)
from .optimizer import (
    FairnessPartition,
    OptimizationResult,
    asymptotics,
    fairness_radius,
    grid_oracle,
    optimal_alpha,
    optimal_beta,
    optimal_xi,
    run_algorithm1,
    sherman_morrison_inverse,
)
from .rates import (
    DecisionVariables,
    RateReport,
    feedback_error_closed_form,
    forward_rates,
    harvested_energy,
    implicit_rate_solve,
    mixing_matrix,
    sinr_decomposition,
)
from .specfun import lambert_w0, rvq_error_mean, rvq_error_sample
from .system import ConfigError, SystemConfig, default_config, load_config, path_loss, validate

__version__ = "0.1.0"

"""
SGD Bounds Lab
Stepsize schedules, feasible-recursion campaigns and SGD experiments that check convergence bounds
"""

__version__ = "0.1.0"

from .averaging import OnlineWeightedMean, averaging_rates
from .engine import (
    BoundReport,
    RunConfig,
    RunResult,
    descent_step_margin,
    run_campaign,
    run_sgd,
    schedule_for_oracle,
    theorem_bound,
)
from .errors import (
    BoundViolation,
    ConfigurationError,
    NumericalFailure,
    OracleConstructionError,
    ParameterError,
    ScheduleError,
    SgdBoundsError,
    SolverDidNotConverge,
)
from .models import CampaignAggregate, ExperimentConfig, load_config, load_config_text
from .oracles import (
    GradientSample,
    ProblemOracle,
    check_mu_convexity,
    check_smoothness_assumption,
    check_unbiasedness,
    make_finite_sum_least_squares,
    make_logistic_regression,
    make_noisy_quadratic,
    sample_gradient,
)
from .recursion_lab import (
    RecursionParams,
    SequencePair,
    VerificationMargin,
    generate_feasible_batch,
    generate_feasible_sequence,
    lemma_constant_bound,
    lemma_decreasing_bound,
    lemma_sublinear_bound,
    lemma_two_phase_bound,
    lemma_unroll_bound,
    verify_lemma,
    weighted_error,
)
from .schedules import (
    StepWeightSchedule,
    classic_constant_stepsize,
    constant_log_stepsize,
    decreasing_schedule,
    iter_schedule_chunks,
    sublinear_stepsize,
    two_phase_schedule,
    user_constant_schedule,
)

__all__ = [
    "StepWeightSchedule",
    "constant_log_stepsize",
    "two_phase_schedule",
    "sublinear_stepsize",
    "classic_constant_stepsize",
    "user_constant_schedule",
    "decreasing_schedule",
    "iter_schedule_chunks",
    "RecursionParams",
    "SequencePair",
    "VerificationMargin",
    "generate_feasible_sequence",
    "generate_feasible_batch",
    "weighted_error",
    "lemma_constant_bound",
    "lemma_two_phase_bound",
    "lemma_sublinear_bound",
    "lemma_unroll_bound",
    "lemma_decreasing_bound",
    "verify_lemma",
    "ProblemOracle",
    "GradientSample",
    "sample_gradient",
    "make_noisy_quadratic",
    "make_finite_sum_least_squares",
    "make_logistic_regression",
    "check_smoothness_assumption",
    "check_mu_convexity",
    "check_unbiasedness",
    "RunConfig",
    "RunResult",
    "BoundReport",
    "run_sgd",
    "run_campaign",
    "descent_step_margin",
    "theorem_bound",
    "schedule_for_oracle",
    "OnlineWeightedMean",
    "averaging_rates",
    "ExperimentConfig",
    "CampaignAggregate",
    "load_config",
    "load_config_text",
    "SgdBoundsError",
    "ParameterError",
    "ScheduleError",
    "OracleConstructionError",
    "SolverDidNotConverge",
    "ConfigurationError",
    "NumericalFailure",
    "BoundViolation",
]

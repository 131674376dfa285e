"""
Oracles Package
Export all problem instances and validators for easy importing
"""
from .base_oracle import GradientSample, ProblemOracle, sample_gradient
from .datasets import (
    cyclic_basis_rows,
    dump_oracle_dataset,
    gaussian_rows,
    logistic_dataset,
    standard_instances,
    write_dataset_csv,
)
from .least_squares import FiniteSumLeastSquares, make_finite_sum_least_squares
from .logistic import LogisticRegression, make_logistic_regression
from .quadratic import NoisyQuadratic, make_noisy_quadratic
from .validators import (
    SmoothnessReport,
    UnbiasednessReport,
    check_mu_convexity,
    check_smoothness_assumption,
    check_unbiasedness,
    confidence_halfwidth,
)

__all__ = [
    "ProblemOracle",
    "GradientSample",
    "sample_gradient",
    "NoisyQuadratic",
    "make_noisy_quadratic",
    "FiniteSumLeastSquares",
    "make_finite_sum_least_squares",
    "LogisticRegression",
    "make_logistic_regression",
    "SmoothnessReport",
    "UnbiasednessReport",
    "check_smoothness_assumption",
    "check_mu_convexity",
    "check_unbiasedness",
    "confidence_halfwidth",
    "cyclic_basis_rows",
    "gaussian_rows",
    "logistic_dataset",
    "write_dataset_csv",
    "dump_oracle_dataset",
    "standard_instances",
]

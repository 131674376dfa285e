"""
Validators Module
Monte-Carlo and direct checks of the oracle assumptions
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ..errors import ParameterError
from .base_oracle import ProblemOracle

logger = logging.getLogger(__name__)

CONFIDENCE = 0.99
Z_99 = float(norm.ppf(0.5 + CONFIDENCE / 2.0))
SAMPLE_BLOCK = 1 << 15
MIN_SMOOTHNESS_SAMPLES = 1000
# halfwidth of the second-moment check, in standard errors
SMOOTHNESS_SIGMAS = 3.0


@dataclass(frozen=True)
class SmoothnessReport:
    """Monte-Carlo estimate of E||g||^2 against 2L(f(x) - f*) + sigma2"""

    lhs_estimate: float
    rhs: float
    slack: float
    ci_halfwidth: float
    violated: bool


@dataclass(frozen=True)
class UnbiasednessReport:
    """Sample mean of g against the full gradient, coordinate by coordinate"""

    mean: np.ndarray
    gradient: np.ndarray
    std: np.ndarray
    n_samples: int
    worst_excess: float
    passed: bool


def confidence_halfwidth(std: float, n: int, z: float = Z_99) -> float:
    """Normal-approximation halfwidth for a mean of n samples, 99% by default"""
    if n <= 1:
        return 0.0
    return z * std / math.sqrt(n)


def _sampled_gradients(oracle: ProblemOracle, x: np.ndarray, n_samples: int, rng: np.random.Generator):
    for start in range(0, n_samples, SAMPLE_BLOCK):
        size = min(SAMPLE_BLOCK, n_samples - start)
        X = np.broadcast_to(x, (size, x.size))
        yield oracle.gradient_from_noise(X, oracle.draw_noise(rng, size))


def check_smoothness_assumption(
    oracle: ProblemOracle,
    x,
    n_samples: int,
    rng: np.random.Generator,
) -> SmoothnessReport:
    """
    Check E||g||^2 <= 2L(f(x) - f*) + sigma2 at one point

    A violation is flagged only when the estimate minus its 3-sigma halfwidth
    still exceeds the right side.

    Args:
        oracle: Problem instance
        x: Query point
        n_samples: Oracle calls, >= 1000
        rng: Seeded generator

    Returns:
        SmoothnessReport
    """
    if n_samples < MIN_SMOOTHNESS_SAMPLES:
        raise ParameterError(f"n_samples must be >= {MIN_SMOOTHNESS_SAMPLES}, got {n_samples}")
    x = np.asarray(x, dtype=np.float64)
    total = 0.0
    total_sq = 0.0
    for G in _sampled_gradients(oracle, x, n_samples, rng):
        sq = np.sum(G * G, axis=1)
        total += float(np.sum(sq))
        total_sq += float(np.sum(sq * sq))
    lhs = total / n_samples
    variance = max(total_sq / n_samples - lhs * lhs, 0.0) * n_samples / (n_samples - 1)
    ci = confidence_halfwidth(math.sqrt(variance), n_samples, SMOOTHNESS_SIGMAS)
    gap = float(oracle.value(x)) - oracle.f_star
    rhs = 2.0 * oracle.L * gap + oracle.sigma2
    tolerance = 1e-12 * max(abs(rhs), abs(lhs))
    violated = lhs - ci > rhs + tolerance
    if violated:
        logger.warning("second-moment bound violated for %r: %.6g > %.6g", oracle, lhs - ci, rhs)
    return SmoothnessReport(
        lhs_estimate=lhs,
        rhs=rhs,
        slack=rhs - lhs,
        ci_halfwidth=ci,
        violated=bool(violated),
    )


def check_mu_convexity(oracle: ProblemOracle, x) -> float:
    """<grad f(x), x - x*> - (mu/2)||x - x*||^2 - (f(x) - f*)"""
    x = np.asarray(x, dtype=np.float64)
    diff = x - oracle.x_star
    inner = float(np.dot(oracle.full_gradient(x), diff))
    return inner - 0.5 * oracle.mu * float(np.dot(diff, diff)) - (float(oracle.value(x)) - oracle.f_star)


def check_unbiasedness(
    oracle: ProblemOracle,
    x,
    n_samples: int,
    rng: np.random.Generator,
    z: float = 4.0,
) -> UnbiasednessReport:
    """
    Compare the mean of n_samples gradients with the full gradient

    Each coordinate must lie within z * std / sqrt(N) of the full gradient;
    zero-variance coordinates must match it to roundoff.
    """
    if n_samples < 2:
        raise ParameterError(f"n_samples must be >= 2, got {n_samples}")
    x = np.asarray(x, dtype=np.float64)
    total = np.zeros(oracle.dim)
    total_sq = np.zeros(oracle.dim)
    for G in _sampled_gradients(oracle, x, n_samples, rng):
        total += G.sum(axis=0)
        total_sq += (G * G).sum(axis=0)
    mean = total / n_samples
    variance = np.maximum(total_sq / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    std = np.sqrt(variance)
    gradient = np.asarray(oracle.full_gradient(x), dtype=np.float64)
    allowed = z * std / math.sqrt(n_samples) + 1e-12 * (1.0 + np.abs(gradient))
    excess = np.abs(mean - gradient) - allowed
    worst = float(excess.max())
    return UnbiasednessReport(
        mean=mean,
        gradient=gradient,
        std=std,
        n_samples=n_samples,
        worst_excess=worst,
        passed=worst <= 0.0,
    )

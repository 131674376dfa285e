"""
Quadratic Oracle Module
Diagonal quadratics with additive Gaussian gradient noise
"""
import logging
from typing import Optional, Sequence

import numpy as np

from ..errors import OracleConstructionError
from .base_oracle import ProblemOracle

logger = logging.getLogger(__name__)


class NoisyQuadratic(ProblemOracle):
    """f(x) = 1/2 sum_i lambda_i (x_i - x*_i)^2 with g = grad f(x) + xi, E||xi||^2 = sigma2"""

    kind = "quadratic"

    def __init__(self, spectrum: np.ndarray, x_star: np.ndarray, sigma2: float, master_seed: int = 0):
        super().__init__(
            dim=spectrum.size,
            mu=float(spectrum.min()),
            L=float(spectrum.max()),
            sigma2=sigma2,
            x_star=x_star,
            f_star=0.0,
            master_seed=master_seed,
        )
        self.spectrum = spectrum
        self.spectrum.setflags(write=False)
        self._noise_scale = np.sqrt(self.sigma2 / self.dim)

    @property
    def deterministic(self) -> bool:
        return self.sigma2 == 0.0

    def value(self, X):
        diff = np.asarray(X, dtype=np.float64) - self.x_star
        return 0.5 * np.sum(self.spectrum * diff * diff, axis=-1)

    def full_gradient(self, X):
        return self.spectrum * (np.asarray(X, dtype=np.float64) - self.x_star)

    def draw_noise(self, rng, count):
        if self.deterministic:
            return np.zeros((count, self.dim))
        return self._noise_scale * rng.standard_normal((count, self.dim))

    def gradient_from_noise(self, X, noise):
        return self.full_gradient(X) + noise


def make_noisy_quadratic(
    spectrum: Sequence[float],
    x_star: Optional[Sequence[float]] = None,
    sigma2: float = 0.0,
    master_seed: int = 0,
) -> NoisyQuadratic:
    """
    Build a diagonal quadratic with spherical Gaussian gradient noise

    Args:
        spectrum: Eigenvalues lambda_1..lambda_n, all >= 0 (mu = min, L = max)
        x_star: Minimizer, zeros when omitted
        sigma2: Total noise variance E||xi||^2
        master_seed: Recorded with the instance; the quadratic has no random data

    Returns:
        NoisyQuadratic oracle
    """
    lam = np.array(spectrum, dtype=np.float64).ravel()
    if lam.size == 0:
        raise OracleConstructionError("spectrum must contain at least one eigenvalue")
    if not np.all(np.isfinite(lam)):
        raise OracleConstructionError("spectrum entries must be finite")
    if np.any(lam < 0):
        raise OracleConstructionError(f"eigenvalues must be >= 0, got min {lam.min()!r}")
    if not lam.max() > 0:
        raise OracleConstructionError("at least one eigenvalue must be positive")
    if not (np.isfinite(sigma2) and sigma2 >= 0):
        raise OracleConstructionError(f"sigma2 must be >= 0, got {sigma2!r}")
    if x_star is None:
        center = np.zeros(lam.size)
    else:
        center = np.array(x_star, dtype=np.float64).ravel()
        if center.shape != lam.shape:
            raise OracleConstructionError(
                f"x_star has {center.size} entries but the spectrum has {lam.size}"
            )
    oracle = NoisyQuadratic(lam, center, float(sigma2), master_seed)
    logger.debug("built %r", oracle)
    return oracle

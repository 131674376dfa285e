"""
Base Oracle Module
Provides the abstract base class for all problem instances
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GradientSample:
    """One stochastic gradient together with the exact objective value at the query point"""

    g: np.ndarray
    fx: float


class ProblemOracle(ABC):
    """Abstract base class for problem instances with certified (mu, L, sigma2)"""

    kind: str = "abstract"

    def __init__(self, dim: int, mu: float, L: float, sigma2: float, x_star: np.ndarray, f_star: float, master_seed: int = 0):
        """
        Initialize the oracle constants

        Args:
            dim: Problem dimension n
            mu: mu-convexity modulus, >= 0
            L: Smoothness constant of the second-moment bound
            sigma2: Noise floor of the second-moment bound
            x_star: Minimizer
            f_star: Minimum value
            master_seed: Seed the instance data was generated from
        """
        self.dim = int(dim)
        self.mu = float(mu)
        self.L = float(L)
        self.sigma2 = float(sigma2)
        self.x_star = np.array(x_star, dtype=np.float64)
        self.x_star.setflags(write=False)
        self.f_star = float(f_star)
        self.master_seed = int(master_seed)

    @property
    def condition_number(self) -> float:
        return self.L / self.mu if self.mu > 0 else float("inf")

    @property
    @abstractmethod
    def deterministic(self) -> bool:
        """True when every sampled gradient equals the full gradient"""
        pass

    @abstractmethod
    def value(self, X: np.ndarray) -> np.ndarray:
        """
        Objective value for a point or a batch of points

        Args:
            X: Array of shape (n,) or (k, n)

        Returns:
            Scalar array or array of shape (k,)
        """
        pass

    @abstractmethod
    def full_gradient(self, X: np.ndarray) -> np.ndarray:
        """Deterministic gradient for a point or a batch of points"""
        pass

    @abstractmethod
    def draw_noise(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """
        Draw the randomness of `count` consecutive oracle calls

        The draws never depend on the query points, so a replicate's stream is
        fixed by its generator alone.

        Args:
            rng: Generator owned by the caller
            count: Number of calls to draw for

        Returns:
            Array whose leading axis has length count
        """
        pass

    @abstractmethod
    def gradient_from_noise(self, X: np.ndarray, noise: np.ndarray) -> np.ndarray:
        """
        Stochastic gradients for a batch of points

        Args:
            X: Points, shape (k, n)
            noise: One draw per point, leading axis k

        Returns:
            Gradients of shape (k, n)
        """
        pass

    def distance_sq(self, X: np.ndarray) -> np.ndarray:
        diff = np.asarray(X, dtype=np.float64) - self.x_star
        return np.sum(diff * diff, axis=-1)

    def start_point(self, rng: np.random.Generator, distance: float) -> np.ndarray:
        """x* plus a uniformly random direction scaled to the given distance"""
        direction = rng.standard_normal(self.dim)
        norm = np.linalg.norm(direction)
        while norm == 0.0:
            direction = rng.standard_normal(self.dim)
            norm = np.linalg.norm(direction)
        return self.x_star + distance * direction / norm

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.dim,
            "mu": self.mu,
            "L": self.L,
            "sigma2": self.sigma2,
        }

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(n={self.dim}, mu={self.mu:.6g}, "
            f"L={self.L:.6g}, sigma2={self.sigma2:.6g})"
        )


def sample_gradient(oracle: ProblemOracle, x, rng: np.random.Generator) -> GradientSample:
    """
    Query the oracle once at x

    Args:
        oracle: Problem instance
        x: Query point of shape (n,)
        rng: Seeded generator

    Returns:
        GradientSample with g and the exact f(x)
    """
    x = np.asarray(x, dtype=np.float64)
    noise = oracle.draw_noise(rng, 1)
    g = oracle.gradient_from_noise(x[None, :], noise)[0]
    return GradientSample(g=g, fx=float(oracle.value(x)))

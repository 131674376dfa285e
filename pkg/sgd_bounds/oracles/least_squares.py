"""
Least Squares Oracle Module
Finite-sum least squares sampled one row at a time
"""
import logging
from typing import Optional, Sequence

import numpy as np

from ..errors import OracleConstructionError
from ..rng import STREAM_DATA, rng_stream
from .base_oracle import ProblemOracle

logger = logging.getLogger(__name__)

# eigenvalues below this fraction of the largest are treated as zero
RANK_RTOL = 1e-12


class FiniteSumLeastSquares(ProblemOracle):
    """f(x) = (1/m) sum_i 1/2 (a_i^T x - b_i)^2, g = grad f_i(x) for uniform i"""

    kind = "least_squares"

    def __init__(self, rows, targets, x_star, mu, L, sigma2, f_star, interpolating, master_seed=0):
        super().__init__(
            dim=rows.shape[1],
            mu=mu,
            L=L,
            sigma2=sigma2,
            x_star=x_star,
            f_star=f_star,
            master_seed=master_seed,
        )
        self.rows = rows
        self.targets = targets
        self.interpolating = interpolating
        self.rows.setflags(write=False)
        self.targets.setflags(write=False)

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def deterministic(self) -> bool:
        return self.m == 1

    def residuals(self, X):
        return np.asarray(X, dtype=np.float64) @ self.rows.T - self.targets

    def value(self, X):
        res = self.residuals(X)
        return 0.5 * np.mean(res * res, axis=-1)

    def full_gradient(self, X):
        return self.residuals(X) @ self.rows / self.m

    def component_gradients(self, x) -> np.ndarray:
        """All m component gradients at one point, shape (m, n)"""
        return self.rows * self.residuals(x)[:, None]

    def draw_noise(self, rng, count):
        return rng.integers(0, self.m, size=count)

    def gradient_from_noise(self, X, noise):
        picked = self.rows[noise]
        res = np.sum(picked * X, axis=1) - self.targets[noise]
        return picked * res[:, None]


def make_finite_sum_least_squares(
    data_rows,
    targets: Optional[Sequence[float]] = None,
    interpolating: bool = False,
    master_seed: int = 0,
    require_strong_convexity: bool = False,
    target_noise: float = 1.0,
) -> FiniteSumLeastSquares:
    """
    Build a least-squares finite sum and certify its oracle constants

    x* is the minimum-norm solution of the normal equations. The constants are
    L = 2 max_i ||a_i||^2, sigma2 = (2/m) sum_i ||grad f_i(x*)||^2 and
    mu = lambda_min((1/m) sum_i a_i a_i^T).

    Args:
        data_rows: m x n matrix of rows a_i
        targets: m targets b_i; generated from a planted solution when omitted
        interpolating: Generate b_i = a_i^T x_planted so every residual vanishes at x*
        master_seed: Seed of the planted solution and target noise
        require_strong_convexity: Refuse instances with mu = 0
        target_noise: Standard deviation of target noise for generated non-interpolating targets

    Returns:
        FiniteSumLeastSquares oracle
    """
    A = np.array(data_rows, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise OracleConstructionError(f"data_rows must be an m x n matrix with m >= 1, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise OracleConstructionError("data_rows must be finite")
    m, n = A.shape
    if not np.any(A):
        raise OracleConstructionError("data_rows must not be all zero")

    if interpolating:
        if targets is not None:
            raise OracleConstructionError("interpolating instances generate their own targets; omit targets")
        rng = rng_stream(master_seed, STREAM_DATA, 0)
        b = A @ rng.standard_normal(n)
    elif targets is None:
        rng = rng_stream(master_seed, STREAM_DATA, 0)
        b = A @ rng.standard_normal(n) + target_noise * rng.standard_normal(m)
    else:
        b = np.array(targets, dtype=np.float64).ravel()
        if b.shape != (m,):
            raise OracleConstructionError(f"expected {m} targets, got {b.size}")
        if not np.all(np.isfinite(b)):
            raise OracleConstructionError("targets must be finite")

    x_star, *_ = np.linalg.lstsq(A, b, rcond=None)
    eigenvalues = np.linalg.eigvalsh(A.T @ A / m)
    mu = float(eigenvalues[0])
    if mu <= RANK_RTOL * float(eigenvalues[-1]):
        mu = 0.0
    if require_strong_convexity and mu == 0.0:
        raise OracleConstructionError(
            "the second-moment matrix is singular, so mu = 0; "
            "build without require_strong_convexity to keep the instance as mu = 0"
        )

    row_norms_sq = np.sum(A * A, axis=1)
    L = 2.0 * float(row_norms_sq.max())
    if interpolating:
        sigma2 = 0.0
        f_star = 0.0
    else:
        res = A @ x_star - b
        sigma2 = 2.0 / m * float(np.sum(row_norms_sq * res * res))
        f_star = 0.5 * float(np.mean(res * res))

    oracle = FiniteSumLeastSquares(
        rows=A,
        targets=b,
        x_star=x_star,
        mu=mu,
        L=L,
        sigma2=sigma2,
        f_star=f_star,
        interpolating=interpolating,
        master_seed=master_seed,
    )
    logger.debug("built %r (m=%d, interpolating=%s)", oracle, m, interpolating)
    return oracle

"""
Logistic Oracle Module
L2-regularized logistic regression with a numerically solved minimizer
"""
import logging
from typing import Sequence

import numpy as np
from scipy.special import expit

from ..errors import OracleConstructionError, SolverDidNotConverge
from .base_oracle import ProblemOracle

logger = logging.getLogger(__name__)

GRADIENT_TOL = 1e-10
MAX_SOLVER_ITERATIONS = 200_000


class LogisticRegression(ProblemOracle):
    """f_i(x) = log(1 + exp(-y_i a_i^T x)) + (lam/2)||x||^2, g = grad f_i(x) for uniform i"""

    kind = "logistic"

    def __init__(self, rows, labels, l2_penalty, master_seed=0):
        self.rows = rows
        self.labels = labels
        self.l2_penalty = l2_penalty
        self.rows.setflags(write=False)
        self.labels.setflags(write=False)
        # constants are filled in by make_logistic_regression once x* is known
        super().__init__(
            dim=rows.shape[1],
            mu=l2_penalty,
            L=2.0 * float(np.max(l2_penalty + np.sum(rows * rows, axis=1) / 4.0)),
            sigma2=0.0,
            x_star=np.zeros(rows.shape[1]),
            f_star=0.0,
            master_seed=master_seed,
        )

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def deterministic(self) -> bool:
        return self.m == 1

    def _margins(self, X):
        return (np.asarray(X, dtype=np.float64) @ self.rows.T) * self.labels

    def value(self, X):
        X = np.asarray(X, dtype=np.float64)
        loss = np.mean(np.logaddexp(0.0, -self._margins(X)), axis=-1)
        return loss + 0.5 * self.l2_penalty * np.sum(X * X, axis=-1)

    def full_gradient(self, X):
        X = np.asarray(X, dtype=np.float64)
        weights = -expit(-self._margins(X)) * self.labels
        return weights @ self.rows / self.m + self.l2_penalty * X

    def component_gradients(self, x) -> np.ndarray:
        """All m component gradients at one point, shape (m, n)"""
        x = np.asarray(x, dtype=np.float64)
        weights = -expit(-self._margins(x)) * self.labels
        return self.rows * weights[:, None] + self.l2_penalty * x

    def draw_noise(self, rng, count):
        return rng.integers(0, self.m, size=count)

    def gradient_from_noise(self, X, noise):
        picked = self.rows[noise]
        y = self.labels[noise]
        margin = np.sum(picked * X, axis=1) * y
        return picked * (-expit(-margin) * y)[:, None] + self.l2_penalty * X


def _solve_minimizer(oracle: LogisticRegression, tol: float, max_iter: int) -> np.ndarray:
    # full-gradient descent with step 1/L_f, L_f = lam + ||A||_2^2 / (4m)
    spectral = np.linalg.norm(oracle.rows, 2)
    step = 1.0 / (oracle.l2_penalty + spectral * spectral / (4.0 * oracle.m))
    x = np.zeros(oracle.dim)
    for iteration in range(max_iter):
        grad = oracle.full_gradient(x)
        norm = float(np.linalg.norm(grad))
        if norm <= tol:
            logger.debug("logistic inner solve converged after %d iterations (|grad| = %.3e)", iteration, norm)
            return x
        x = x - step * grad
    norm = float(np.linalg.norm(oracle.full_gradient(x)))
    if norm <= tol:
        return x
    raise SolverDidNotConverge(
        f"logistic inner solve stopped at |grad f| = {norm:.3e} > {tol:.1e} after {max_iter} iterations"
    )


def make_logistic_regression(
    data_rows,
    labels: Sequence[float],
    l2_penalty: float,
    master_seed: int = 0,
    tol: float = GRADIENT_TOL,
    max_iter: int = MAX_SOLVER_ITERATIONS,
) -> LogisticRegression:
    """
    Build a regularized logistic regression and solve for its minimizer

    mu = lam, L = 2 max_i (lam + ||a_i||^2 / 4), and sigma2 = (2/m) sum_i ||grad f_i(x*)||^2
    with x* from a deterministic gradient descent run to |grad f| <= tol.

    Args:
        data_rows: m x n feature matrix
        labels: m labels in {-1, +1}
        l2_penalty: lam > 0
        master_seed: Recorded with the instance
        tol: Gradient-norm target of the inner solve
        max_iter: Iteration budget of the inner solve

    Returns:
        LogisticRegression oracle
    """
    A = np.array(data_rows, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise OracleConstructionError(f"data_rows must be an m x n matrix with m >= 1, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise OracleConstructionError("data_rows must be finite")
    y = np.array(labels, dtype=np.float64).ravel()
    if y.shape != (A.shape[0],):
        raise OracleConstructionError(f"expected {A.shape[0]} labels, got {y.size}")
    if not np.all(np.abs(y) == 1.0):
        raise OracleConstructionError("labels must be -1 or +1")
    if not (np.isfinite(l2_penalty) and l2_penalty > 0):
        raise OracleConstructionError(f"l2_penalty must be > 0, got {l2_penalty!r}")

    oracle = LogisticRegression(A, y, float(l2_penalty), master_seed)
    x_star = _solve_minimizer(oracle, tol, max_iter)
    oracle.x_star = x_star
    oracle.x_star.setflags(write=False)
    oracle.f_star = float(oracle.value(x_star))
    components = oracle.component_gradients(x_star)
    oracle.sigma2 = 2.0 / oracle.m * float(np.sum(components * components))
    logger.debug("built %r", oracle)
    return oracle

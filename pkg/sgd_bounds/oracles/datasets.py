"""
Datasets Module
Synthetic data generators, CSV dumps and the standard instance grid
"""
import csv
import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from ..errors import OracleConstructionError
from ..rng import STREAM_DATA, rng_stream
from .base_oracle import ProblemOracle
from .least_squares import make_finite_sum_least_squares
from .logistic import make_logistic_regression
from .quadratic import make_noisy_quadratic

logger = logging.getLogger(__name__)


def cyclic_basis_rows(m: int, n: int) -> np.ndarray:
    """Rows a_i = e_{i mod n}; with m a multiple of n the second-moment matrix is I/n"""
    if m < 1 or n < 1:
        raise OracleConstructionError(f"m and n must be >= 1, got m={m}, n={n}")
    rows = np.zeros((m, n))
    rows[np.arange(m), np.arange(m) % n] = 1.0
    return rows


def gaussian_rows(m: int, n: int, master_seed: int, rank: Optional[int] = None) -> np.ndarray:
    """
    Gaussian m x n design, optionally of reduced rank

    Args:
        m: Number of rows
        n: Dimension
        master_seed: Seed of the data stream
        rank: Target rank; full rank when omitted

    Returns:
        m x n matrix with rows scaled to unit expected norm
    """
    if m < 1 or n < 1:
        raise OracleConstructionError(f"m and n must be >= 1, got m={m}, n={n}")
    rank = min(m, n) if rank is None else int(rank)
    if not 1 <= rank <= min(m, n):
        raise OracleConstructionError(f"rank must lie in [1, {min(m, n)}], got {rank}")
    rng = rng_stream(master_seed, STREAM_DATA, 1)
    if rank == min(m, n):
        return rng.standard_normal((m, n)) / np.sqrt(n)
    left = rng.standard_normal((m, rank))
    right = rng.standard_normal((rank, n))
    return left @ right / np.sqrt(n * rank)


def logistic_dataset(m: int, n: int, master_seed: int, flip: float = 0.1) -> Tuple[np.ndarray, np.ndarray]:
    """Gaussian features with labels from a planted separator, a fraction `flip` flipped"""
    rows = gaussian_rows(m, n, master_seed)
    rng = rng_stream(master_seed, STREAM_DATA, 2)
    planted = rng.standard_normal(n)
    labels = np.where(rows @ planted >= 0.0, 1.0, -1.0)
    flips = rng.random(m) < flip
    labels[flips] *= -1.0
    return rows, labels


def write_dataset_csv(path: Path, rows: np.ndarray, targets: np.ndarray) -> Path:
    """Dump one sample per line: x0..x{n-1}, target"""
    rows = np.asarray(rows, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([f"x{j}" for j in range(rows.shape[1])] + ["target"])
        for features, target in zip(rows, targets):
            writer.writerow([repr(float(v)) for v in features] + [repr(float(target))])
    return path


def dump_oracle_dataset(oracle: ProblemOracle, path: Path) -> Optional[Path]:
    """CSV dump of a finite-sum instance; quadratics carry no data and return None"""
    if hasattr(oracle, "targets"):
        return write_dataset_csv(path, oracle.rows, oracle.targets)
    if hasattr(oracle, "labels"):
        return write_dataset_csv(path, oracle.rows, oracle.labels)
    return None


def standard_instances(master_seed: int = 0) -> List[Tuple[str, ProblemOracle]]:
    """
    The fixed instance grid the assumption validators are run against

    Returns:
        (label, oracle) pairs
    """
    instances = [
        ("quadratic-identity", make_noisy_quadratic([1.0], sigma2=0.0, master_seed=master_seed)),
        ("quadratic-kappa10", make_noisy_quadratic([0.1, 1.0], sigma2=0.0, master_seed=master_seed)),
        ("quadratic-noisy-1d", make_noisy_quadratic([1.0], sigma2=4.0, master_seed=master_seed)),
        (
            "quadratic-noisy-10d",
            make_noisy_quadratic(np.geomspace(0.1, 1.0, 10), sigma2=1.0, master_seed=master_seed),
        ),
        (
            "least-squares-interpolating",
            make_finite_sum_least_squares(cyclic_basis_rows(50, 10), interpolating=True, master_seed=master_seed),
        ),
        (
            "least-squares-noisy",
            make_finite_sum_least_squares(gaussian_rows(50, 10, master_seed), master_seed=master_seed),
        ),
        (
            "least-squares-singular",
            make_finite_sum_least_squares(
                gaussian_rows(30, 10, master_seed, rank=5), interpolating=True, master_seed=master_seed
            ),
        ),
    ]
    rows, labels = logistic_dataset(40, 5, master_seed)
    instances.append(("logistic", make_logistic_regression(rows, labels, 0.1, master_seed=master_seed)))
    return instances

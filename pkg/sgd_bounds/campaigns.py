"""
Campaigns Module
Builds campaign cells from a config and executes them in parallel

Cells run on worker threads through asyncio.to_thread, at most `workers` at a
time. Every cell's randomness is keyed by its own index, so the results do not
depend on the worker count or on completion order.
"""
import asyncio
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .engine import RunConfig, run_campaign, schedule_for_oracle
from .errors import SgdBoundsError
from .models.config import ExperimentConfig, ProblemBlock
from .models.reports import CampaignAggregate
from .oracles import (
    ProblemOracle,
    check_mu_convexity,
    check_smoothness_assumption,
    check_unbiasedness,
    cyclic_basis_rows,
    gaussian_rows,
    logistic_dataset,
    make_finite_sum_least_squares,
    make_logistic_regression,
    make_noisy_quadratic,
    standard_instances,
)
from .recursion_lab import LemmaOutcome, RecursionCell, RecursionParams, run_lemma_cell
from .rng import STREAM_ORACLE_CHECK, STREAM_START_POINT, rng_stream

logger = logging.getLogger(__name__)

UNBIASEDNESS_POINTS = 5


@dataclass
class CellRecord:
    """Outcome of one cell: its result, or the error that stopped it"""

    index: int
    label: str
    success: bool
    result: Any = None
    error: Optional[str] = None
    error_type: Optional[str] = None
    elapsed: float = 0.0


@dataclass
class SkippedCell:
    """A grid point whose parameters violate a precondition"""

    label: str
    reason: str


@dataclass
class OracleCheckRow:
    """Assumption checks at one query point"""

    label: str
    kind: str
    n: int
    point: int
    lhs_estimate: float
    rhs: float
    slack: float
    ci_halfwidth: float
    violated: bool
    mu_margin: float
    unbiased: Optional[bool] = None


@dataclass
class RecursionGrid:
    """Cells of a verify-recursion campaign plus the grid points that were skipped"""

    cells: List[RecursionCell] = field(default_factory=list)
    skipped: List[SkippedCell] = field(default_factory=list)


class CampaignRunner:
    """Parallel executor for independent campaign cells"""

    def __init__(self, workers: int = 1):
        """
        Initialize the runner

        Args:
            workers: Maximum number of cells in flight
        """
        self.workers = max(1, int(workers))

    async def _run_cell_async(
        self,
        semaphore: asyncio.Semaphore,
        index: int,
        label: str,
        func: Callable[[], Any],
    ) -> CellRecord:
        async with semaphore:
            logger.debug("starting cell %d (%s)", index, label)
            start = time.time()
            try:
                result = await asyncio.to_thread(func)
                return CellRecord(index=index, label=label, success=True, result=result, elapsed=time.time() - start)
            except SgdBoundsError as exc:
                elapsed = time.time() - start
                logger.warning("cell %s failed after %.1fs: %s", label, elapsed, exc)
                return CellRecord(
                    index=index,
                    label=label,
                    success=False,
                    error=str(exc),
                    error_type=type(exc).__name__,
                    elapsed=elapsed,
                )
            except Exception as exc:
                # anything else fails this cell only
                elapsed = time.time() - start
                logger.exception("cell %s crashed after %.1fs", label, elapsed)
                return CellRecord(
                    index=index,
                    label=label,
                    success=False,
                    error=str(exc),
                    error_type=type(exc).__name__,
                    elapsed=elapsed,
                )

    async def run(self, cells: List[Tuple[str, Callable[[], Any]]]) -> List[CellRecord]:
        """
        Run all cells and return their records in cell order

        Args:
            cells: (label, zero-argument callable) pairs

        Returns:
            One CellRecord per cell
        """
        semaphore = asyncio.Semaphore(self.workers)
        records = await asyncio.gather(
            *(self._run_cell_async(semaphore, i, label, func) for i, (label, func) in enumerate(cells))
        )
        return sorted(records, key=lambda record: record.index)

    def run_sync(self, cells: List[Tuple[str, Callable[[], Any]]]) -> List[CellRecord]:
        """Synchronous wrapper for run"""
        return asyncio.run(self.run(cells))


# ---------------------------------------------------------------------------
# problems


def build_oracle(block: ProblemBlock, master_seed: int) -> ProblemOracle:
    """Instantiate the oracle a problem block describes"""
    seed = master_seed if block.data_seed is None else block.data_seed
    if block.kind == "quadratic":
        if block.spectrum is not None:
            spectrum = block.spectrum
        else:
            kappa = block.condition_number or 1.0
            spectrum = np.geomspace(block.mu, block.mu * kappa, block.dim) if block.mu > 0 else np.zeros(block.dim)
        return make_noisy_quadratic(spectrum, sigma2=block.sigma2, master_seed=seed)
    if block.kind == "least_squares":
        if block.design == "cyclic_basis":
            rows = cyclic_basis_rows(block.m, block.dim)
        else:
            rows = gaussian_rows(block.m, block.dim, seed, block.rank)
        return make_finite_sum_least_squares(
            rows,
            interpolating=block.interpolating,
            master_seed=seed,
            target_noise=block.target_noise,
        )
    rows, labels = logistic_dataset(block.m, block.dim, seed, block.label_flip)
    return make_logistic_regression(rows, labels, block.l2_penalty, master_seed=seed)


def start_point(block: ProblemBlock, oracle: ProblemOracle, master_seed: int, problem_index: int) -> np.ndarray:
    """Explicit x0, or x* plus a random direction of length x0_distance"""
    if block.x0 is not None:
        return np.array(block.x0, dtype=np.float64)
    rng = rng_stream(master_seed, STREAM_START_POINT, problem_index)
    return oracle.start_point(rng, block.x0_distance)


def engine_cells(config: ExperimentConfig) -> List[Tuple[str, Callable[[], CampaignAggregate]]]:
    """
    One cell per (problem, schedule, T)

    Oracles are built up front so construction errors surface before any cell runs.
    """
    algorithm = config.algorithm
    cells = []
    for p, block in enumerate(config.problems):
        oracle = build_oracle(block, config.master_seed)
        x0 = start_point(block, oracle, config.master_seed, p)
        R = float(np.sqrt(oracle.distance_sq(x0)))
        logger.info("problem %s: %r, R = %.4g", block.name, oracle, R)
        for family, T in itertools.product(algorithm.schedules, algorithm.horizons):
            label = f"{block.name}/{family}/T={T}"

            def cell(oracle=oracle, x0=x0, R=R, family=family, T=T, name=block.name):
                schedule = schedule_for_oracle(
                    family, oracle, R, T, gamma=algorithm.gamma, decreasing_weights=algorithm.decreasing_weights
                )
                aggregate = run_campaign(
                    oracle, x0, RunConfig(horizon=T, schedule=schedule), config.replicates, config.master_seed
                )
                return aggregate.model_copy(update={"problem": name})

            cells.append((label, cell))
    return cells


# ---------------------------------------------------------------------------
# recursion grid


def recursion_grid(config: ExperimentConfig) -> RecursionGrid:
    """Expand the recursion block into cells; d = factor * a + offset"""
    block = config.recursion
    grid = RecursionGrid()
    index = 0
    for a, factor, offset, c, b, T, r0 in itertools.product(
        block.a, block.d_factors, block.d_offsets, block.c, block.b, block.T, block.r0
    ):
        d = factor * a + offset
        label = f"a={a:g} b={b:g} c={c:g} d={d:g} T={T} r0={r0:g}"
        try:
            params = RecursionParams(a=a, b=b, c=c, d=d)
        except SgdBoundsError as exc:
            grid.skipped.append(SkippedCell(label=label, reason=str(exc)))
            continue
        grid.cells.append(RecursionCell(index=index, params=params, T=T, r0=r0))
        index += 1
    return grid


def recursion_cells(
    config: ExperimentConfig, grid: RecursionGrid
) -> List[Tuple[str, Callable[[], List[LemmaOutcome]]]]:
    """One cell per grid point, running every configured lemma and mode"""
    block = config.recursion
    cells = []
    for cell in grid.cells:
        p = cell.params
        label = f"a={p.a:g} b={p.b:g} c={p.c:g} d={p.d:g} T={cell.T} r0={cell.r0:g}"

        def run(cell=cell):
            outcomes = []
            for lemma in block.lemmas:
                outcomes.extend(
                    run_lemma_cell(
                        cell,
                        lemma,
                        block.modes,
                        block.draws,
                        config.master_seed,
                        gating=lemma in block.gating_lemmas,
                        chunk=block.chunk,
                        s_strategy=block.s_strategy,
                        per_draw_rows=block.per_draw_rows,
                    )
                )
            return outcomes

        cells.append((label, run))
    return cells


# ---------------------------------------------------------------------------
# oracle checks


def oracle_instances(config: ExperimentConfig) -> List[Tuple[str, ProblemOracle]]:
    """The standard grid (unless disabled) followed by the config's own problems"""
    instances = standard_instances(config.master_seed) if config.oracle_check.standard_instances else []
    for block in config.problems:
        instances.append((block.name, build_oracle(block, config.master_seed)))
    return instances


def oracle_check_cells(config: ExperimentConfig) -> List[Tuple[str, Callable[[], List[OracleCheckRow]]]]:
    """One cell per instance; query points are x* plus Gaussian offsets"""
    block = config.oracle_check
    cells = []
    for i, (label, oracle) in enumerate(oracle_instances(config)):

        def run(i=i, label=label, oracle=oracle):
            rows = []
            for point in range(block.points):
                rng = rng_stream(config.master_seed, STREAM_ORACLE_CHECK, i, point)
                x = oracle.x_star + block.point_scale * rng.standard_normal(oracle.dim)
                report = check_smoothness_assumption(oracle, x, block.samples, rng)
                unbiased = None
                if point < UNBIASEDNESS_POINTS:
                    unbiased = check_unbiasedness(oracle, x, block.unbiasedness_samples, rng).passed
                rows.append(
                    OracleCheckRow(
                        label=label,
                        kind=oracle.kind,
                        n=oracle.dim,
                        point=point,
                        lhs_estimate=report.lhs_estimate,
                        rhs=report.rhs,
                        slack=report.slack,
                        ci_halfwidth=report.ci_halfwidth,
                        violated=report.violated,
                        mu_margin=check_mu_convexity(oracle, x),
                        unbiased=unbiased,
                    )
                )
            return rows

        cells.append((label, run))
    return cells


def failure_summary(records: List[CellRecord]) -> Dict[str, int]:
    """Count failed cells by exception type"""
    counts: Dict[str, int] = {}
    for record in records:
        if not record.success:
            counts[record.error_type] = counts.get(record.error_type, 0) + 1
    return counts

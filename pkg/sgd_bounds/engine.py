"""
Engine Module
Runs SGD under a stepsize/weight schedule and measures it against the theoretical bounds

All replicates of a cell advance together as one (R x n) array. Replicate r
draws its oracle randomness from its own Philox stream keyed by
(master_seed, r) in fixed-size blocks, so a single run and the same replicate
inside a campaign see identical gradients.
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .averaging import averaging_rates
from .errors import ConfigurationError, NumericalFailure, ParameterError
from .models.reports import BoundReport, CampaignAggregate, FamilyCheck, ReplicateRow
from .oracles.base_oracle import ProblemOracle
from .oracles.validators import confidence_halfwidth
from .recursion_lab import RecursionParams, constant_stepsize_bound, lemma_decreasing_bound
from .rng import STREAM_REPLICATE, derive_seed, rng_stream
from .schedules import (
    StepWeightSchedule,
    classic_constant_stepsize,
    constant_log_stepsize,
    decreasing_schedule,
    sublinear_stepsize,
    two_phase_schedule,
    user_constant_schedule,
)

logger = logging.getLogger(__name__)

NOISE_BLOCK = 256
DESCENT_RTOL = 1e-10


@dataclass
class RunConfig:
    """Horizon, schedule and seeding of one SGD run"""

    horizon: int
    schedule: StepWeightSchedule
    replicate_seed: int = 0
    replicate_index: int = 0
    record_trajectory: bool = False
    descent_check: bool = False

    def __post_init__(self):
        if self.schedule.horizon != self.horizon:
            raise ConfigurationError(
                f"schedule horizon {self.schedule.horizon} does not match T = {self.horizon}"
            )


@dataclass
class RunResult:
    """Metrics of one SGD run"""

    f_gap_avg: float
    dist_sq_last: float
    composite: float
    x_avg: np.ndarray
    x_last: np.ndarray
    descent_margins: Optional[np.ndarray] = None
    trajectory: Optional[np.ndarray] = None
    wall_time: float = 0.0


@dataclass
class BatchOutcome:
    """Per-replicate metrics of a batched run"""

    f_gap_avg: np.ndarray
    dist_sq_last: np.ndarray
    composite: np.ndarray
    x_avg: np.ndarray
    x_last: np.ndarray
    descent_margins: Optional[np.ndarray] = None
    trajectory: Optional[np.ndarray] = None


@dataclass(frozen=True)
class DecayCheck:
    """Geometric-decay comparison between horizons T and 2T"""

    T: int
    composite_T: float
    composite_2T: float
    allowed: float

    @property
    def passed(self) -> bool:
        return self.composite_2T <= self.allowed


# ---------------------------------------------------------------------------
# schedules tied to an oracle


def recursion_params_for(oracle: ProblemOracle) -> RecursionParams:
    """Recursion constants of SGD on an oracle: a = mu, b = 1, c = sigma2, d = 2L"""
    return RecursionParams(a=oracle.mu, b=1.0, c=oracle.sigma2, d=2.0 * oracle.L)


def schedule_for_oracle(
    family: str,
    oracle: ProblemOracle,
    R: float,
    T: int,
    gamma: Optional[float] = None,
    decreasing_weights: str = "linear",
) -> StepWeightSchedule:
    """
    Build a schedule of the given family from an oracle's constants

    Args:
        family: Schedule family name
        oracle: Problem instance supplying mu, L and sigma2
        R: Initial distance ||x0 - x*||
        T: Horizon
        gamma: Constant stepsize for user_constant
        decreasing_weights: "linear" or "quadratic" for the decreasing family

    Returns:
        StepWeightSchedule with every gamma_t <= 1/(2L)
    """
    d = 2.0 * oracle.L
    r0 = R * R
    if family == "two_phase":
        return two_phase_schedule(oracle.mu, d, T)
    if family == "sublinear":
        return sublinear_stepsize(d, oracle.sigma2, r0, T)
    if family == "constant_log":
        return constant_log_stepsize(oracle.mu, d, oracle.sigma2, r0, T)
    if family == "classic_constant":
        return classic_constant_stepsize(oracle.mu, oracle.L, r0, oracle.sigma2, T)
    if family == "decreasing":
        return decreasing_schedule(oracle.mu, d, T, decreasing_weights)
    if family == "user_constant":
        if gamma is None:
            raise ConfigurationError("user_constant needs an explicit gamma")
        return user_constant_schedule(gamma, d, oracle.mu, T)
    raise ConfigurationError(f"unknown schedule family {family!r}")


# ---------------------------------------------------------------------------
# per-step descent inequality


def descent_step_margin(oracle: ProblemOracle, x_t, x_next, gamma: float, g=None) -> float:
    """
    (1 - mu g)||x_t - x*||^2 - g(f(x_t) - f*) + g^2 sigma2 - ||x_{t+1} - x*||^2

    Only meaningful pathwise for deterministic oracles.

    Args:
        oracle: Deterministic problem instance
        x_t: Current iterate
        x_next: Next iterate; computed as x_t - gamma * g when None
        gamma: Stepsize
        g: Gradient used for the step

    Returns:
        The margin; non-negative up to roundoff for gamma <= 1/(2L)
    """
    if not oracle.deterministic:
        raise ParameterError("the descent inequality holds in expectation only; use a deterministic oracle")
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_next is None:
        if g is None:
            raise ParameterError("pass either x_next or g")
        x_next = x_t - gamma * np.asarray(g, dtype=np.float64)
    return float(
        _descent_margins(oracle, x_t[None, :], np.asarray(x_next, dtype=np.float64)[None, :], gamma)[0]
    )


def _descent_margins(oracle: ProblemOracle, X, X_next, gamma: float) -> np.ndarray:
    dist_now = oracle.distance_sq(X)
    gap = oracle.value(X) - oracle.f_star
    dist_next = oracle.distance_sq(X_next)
    return (1.0 - oracle.mu * gamma) * dist_now - gamma * gap + gamma * gamma * oracle.sigma2 - dist_next


# ---------------------------------------------------------------------------
# SGD core


def _check_schedule(oracle: ProblemOracle, schedule: StepWeightSchedule) -> None:
    cap = 1.0 / (2.0 * oracle.L)
    above = np.flatnonzero(schedule.gammas > cap)
    if above.size:
        t = int(above[0])
        raise ConfigurationError(
            f"gamma_{t} = {schedule.gammas[t]!r} exceeds 1/(2L) = {cap!r}; "
            "the descent lemma needs every stepsize below it"
        )


def simulate_replicates(
    oracle: ProblemOracle,
    x0,
    schedule: StepWeightSchedule,
    master_seed: int,
    replicate_indices: Sequence[int],
    record_trajectory: bool = False,
    descent_check: bool = False,
) -> BatchOutcome:
    """
    Run SGD for several replicates at once

    x_{t+1} = x_t - gamma_t g_t, and the weighted average is folded online as
    xbar <- (1 - rho_t) xbar + rho_t x_t. Zero-weight iterates advance the
    state but never touch the average.

    Args:
        oracle: Problem instance
        x0: Starting point shared by all replicates
        schedule: Stepsizes and weights for t = 0..T
        master_seed: Seed the replicate streams derive from
        replicate_indices: Replicate numbers r; stream (master_seed, r)
        record_trajectory: Keep x_0..x_{T+1} for every replicate
        descent_check: Record the per-step descent margin (deterministic oracles only)

    Returns:
        BatchOutcome with one entry per replicate, in the order given
    """
    _check_schedule(oracle, schedule)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (oracle.dim,):
        raise ConfigurationError(f"x0 must have shape ({oracle.dim},), got {x0.shape}")
    if descent_check and not oracle.deterministic:
        raise ConfigurationError("descent_check needs a deterministic oracle (sigma2 = 0, no sampling)")
    indices = [int(r) for r in replicate_indices]
    if not indices:
        raise ConfigurationError("at least one replicate is required")

    T = schedule.horizon
    count = len(indices)
    streams = [rng_stream(master_seed, STREAM_REPLICATE, r) for r in indices]
    rates = averaging_rates(schedule.log_weights)
    gammas = schedule.gammas

    X = np.tile(x0, (count, 1))
    X_avg = np.zeros_like(X)
    trajectory = np.empty((count, T + 2, oracle.dim)) if record_trajectory else None
    margins = np.empty((count, T + 1)) if descent_check else None

    for start in range(0, T + 1, NOISE_BLOCK):
        size = min(NOISE_BLOCK, T + 1 - start)
        noise = np.stack([oracle.draw_noise(rng, size) for rng in streams])
        for j in range(size):
            t = start + j
            gamma = float(gammas[t])
            if trajectory is not None:
                trajectory[:, t] = X
            G = oracle.gradient_from_noise(X, noise[:, j])
            X_next = X - gamma * G
            if margins is not None:
                margins[:, t] = _descent_margins(oracle, X, X_next, gamma)
            rho = rates[t]
            if rho >= 1.0:
                X_avg = X.copy()
            elif rho > 0.0:
                X_avg = (1.0 - rho) * X_avg + rho * X
            X = X_next
        if not np.all(np.isfinite(X)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(X), axis=1))[0])
            raise NumericalFailure(
                f"non-finite iterate in replicate {indices[bad]} before step {start + size}"
            )
    if trajectory is not None:
        trajectory[:, T + 1] = X

    f_gap = oracle.value(X_avg) - oracle.f_star
    dist_sq = oracle.distance_sq(X)
    composite = f_gap + oracle.mu * dist_sq
    if not (np.all(np.isfinite(f_gap)) and np.all(np.isfinite(dist_sq))):
        raise NumericalFailure("non-finite metrics at the end of the run")
    return BatchOutcome(
        f_gap_avg=f_gap,
        dist_sq_last=dist_sq,
        composite=composite,
        x_avg=X_avg,
        x_last=X,
        descent_margins=margins,
        trajectory=trajectory,
    )


def run_sgd(oracle: ProblemOracle, x0, cfg: RunConfig) -> RunResult:
    """
    Run one SGD replicate

    Args:
        oracle: Problem instance
        x0: Starting point
        cfg: Horizon, schedule, seeding and recording flags

    Returns:
        RunResult with f(xbar_T) - f*, ||x_{T+1} - x*||^2 and their composite
    """
    start = time.time()
    outcome = simulate_replicates(
        oracle,
        x0,
        cfg.schedule,
        cfg.replicate_seed,
        [cfg.replicate_index],
        record_trajectory=cfg.record_trajectory,
        descent_check=cfg.descent_check,
    )
    return RunResult(
        f_gap_avg=float(outcome.f_gap_avg[0]),
        dist_sq_last=float(outcome.dist_sq_last[0]),
        composite=float(outcome.composite[0]),
        x_avg=outcome.x_avg[0],
        x_last=outcome.x_last[0],
        descent_margins=None if outcome.descent_margins is None else outcome.descent_margins[0],
        trajectory=None if outcome.trajectory is None else outcome.trajectory[0],
        wall_time=time.time() - start,
    )


# ---------------------------------------------------------------------------
# bounds


def last_iterate_distance_bound(mu: float, R: float, sigma2: float, gamma: float, T: int) -> float:
    """(1 - mu gamma)^T R^2 + gamma sigma2 / mu"""
    if not mu > 0:
        raise ParameterError("the last-iterate distance bound needs mu > 0")
    return (1.0 - mu * gamma) ** T * R * R + gamma * sigma2 / mu


def theorem_bound(mu: float, L: float, R: float, sigma2: float, T: int, gamma: Optional[float] = None) -> BoundReport:
    """
    Evaluate both branches of the main convergence bound

    Args:
        mu: mu-convexity modulus, >= 0 (mu = 0 removes the exponential branch)
        L: Smoothness constant, > 0
        R: Initial distance ||x0 - x*||
        sigma2: Noise floor
        T: Horizon, >= 1
        gamma: Constant stepsize for the distance bound; the classic tuned stepsize when omitted

    Returns:
        BoundReport
    """
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T!r}")
    if mu < 0 or not L > 0 or R < 0 or sigma2 < 0:
        raise ParameterError("need mu >= 0, L > 0, R >= 0 and sigma2 >= 0")
    sigma = math.sqrt(sigma2)
    branch_sub = 2.0 * L * R * R / T + 2.0 * sigma * R / math.sqrt(T)
    if mu > 0:
        branch_exp = 64.0 * L * R * R * math.exp(-mu * T / (4.0 * L)) + 36.0 * sigma2 / (mu * T)
        if gamma is None:
            gamma = float(classic_constant_stepsize(mu, L, R * R, sigma2, T).gammas[0])
        last_iterate = last_iterate_distance_bound(mu, R, sigma2, gamma, T)
        improved = mu * R * R * math.exp(-mu * T / L) + sigma2 / (mu * T)
    else:
        branch_exp = math.inf
        last_iterate = None
        improved = None
    return BoundReport(
        theorem_branch_exp=branch_exp,
        theorem_branch_sub=branch_sub,
        theorem_min=min(branch_exp, branch_sub),
        last_iterate_distance_bound=last_iterate,
        distance_gamma=gamma if mu > 0 else None,
        improved_informational=improved,
    )


def _mean_ci(values: np.ndarray):
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return mean, std, confidence_halfwidth(std, values.size)


def family_checks(
    schedule: StepWeightSchedule,
    oracle: ProblemOracle,
    R: float,
    bounds: BoundReport,
    outcome: BatchOutcome,
) -> List[FamilyCheck]:
    """The bound checks that apply to a schedule family"""
    T = schedule.horizon
    composite = _mean_ci(outcome.composite)
    checks = []
    if schedule.family == "two_phase":
        checks.append(
            FamilyCheck(name="composite<=theorem_min", measured=composite[0], ci_halfwidth=composite[2], bound=bounds.theorem_min)
        )
    elif schedule.family == "sublinear":
        f_gap = _mean_ci(outcome.f_gap_avg)
        checks.append(
            FamilyCheck(
                name="f_gap_avg<=theorem_branch_sub",
                measured=f_gap[0],
                ci_halfwidth=f_gap[2],
                bound=bounds.theorem_branch_sub,
                gating=not schedule.degenerate,
            )
        )
    elif schedule.family in ("constant_log", "user_constant"):
        bound = constant_stepsize_bound(recursion_params_for(oracle), R * R, float(schedule.gammas[0]), T)
        checks.append(
            FamilyCheck(name="composite<=constant_stepsize_bound", measured=composite[0], ci_halfwidth=composite[2], bound=bound)
        )
    elif schedule.family == "classic_constant":
        dist = _mean_ci(outcome.dist_sq_last)
        bound = last_iterate_distance_bound(oracle.mu, R, oracle.sigma2, float(schedule.gammas[0]), T)
        checks.append(
            FamilyCheck(name="dist_sq_last<=last_iterate_distance_bound", measured=dist[0], ci_halfwidth=dist[2], bound=bound)
        )
    elif schedule.family == "decreasing":
        bound = lemma_decreasing_bound(recursion_params_for(oracle), R * R, T)
        checks.append(
            FamilyCheck(
                name="composite<=decreasing_bound",
                measured=composite[0],
                ci_halfwidth=composite[2],
                bound=bound,
                gating=False,
            )
        )
    return checks


def run_campaign(
    oracle: ProblemOracle,
    x0,
    cfg: RunConfig,
    n_replicates: int,
    master_seed: int,
) -> CampaignAggregate:
    """
    Run n_replicates independent replicates and aggregate them

    Replicate r uses the stream (master_seed, r). The mean is taken over the
    replicate array in index order and the CI is the 99% normal halfwidth.

    Args:
        oracle: Problem instance
        x0: Starting point
        cfg: Horizon and schedule (seed fields are ignored)
        n_replicates: Number of replicates, >= 1
        master_seed: Campaign seed

    Returns:
        CampaignAggregate with bounds, family checks and per-replicate rows
    """
    if n_replicates < 1:
        raise ConfigurationError(f"replicates must be >= 1, got {n_replicates}")
    start = time.time()
    x0 = np.asarray(x0, dtype=np.float64)
    R = float(np.sqrt(oracle.distance_sq(x0)))
    schedule = cfg.schedule
    outcome = simulate_replicates(oracle, x0, schedule, master_seed, range(n_replicates))

    constant = schedule.family in ("constant_log", "user_constant", "classic_constant")
    bounds = theorem_bound(
        oracle.mu,
        oracle.L,
        R,
        oracle.sigma2,
        cfg.horizon,
        gamma=float(schedule.gammas[0]) if constant and oracle.mu > 0 else None,
    )
    mean, std, ci = _mean_ci(outcome.composite)
    checks = family_checks(schedule, oracle, R, bounds, outcome)
    ratio = (mean + ci) / bounds.theorem_min if bounds.theorem_min > 0 else math.inf
    bounds = bounds.model_copy(
        update={"measured_over_bound": {"theorem_min": ratio, **{c.name: c.ratio for c in checks}}}
    )
    rows = [
        ReplicateRow(
            index=r,
            seed=derive_seed(master_seed, STREAM_REPLICATE, r),
            f_gap_avg=float(outcome.f_gap_avg[r]),
            dist_sq_last=float(outcome.dist_sq_last[r]),
            composite=float(outcome.composite[r]),
        )
        for r in range(n_replicates)
    ]
    aggregate = CampaignAggregate(
        kind=oracle.kind,
        n=oracle.dim,
        mu=oracle.mu,
        L=oracle.L,
        sigma2=oracle.sigma2,
        R=R,
        schedule=schedule.family,
        T=cfg.horizon,
        seed=int(master_seed),
        n_replicates=n_replicates,
        mean_f_gap=float(np.mean(outcome.f_gap_avg)),
        mean_dist_sq=float(np.mean(outcome.dist_sq_last)),
        mean_composite=mean,
        std_composite=std,
        ci_composite=ci,
        bounds=bounds,
        ratio=ratio,
        checks=checks,
        replicates=rows,
        wall_time=time.time() - start,
    )
    logger.info(
        "%s/%s T=%d: composite %.4g +- %.2g vs theorem %.4g",
        oracle.kind,
        schedule.family,
        cfg.horizon,
        mean,
        ci,
        bounds.theorem_min,
    )
    return aggregate


def interpolation_decay_checks(
    aggregates: Sequence[CampaignAggregate],
    mu: float,
    L: float,
    headroom: float = 0.1,
) -> List[DecayCheck]:
    """
    composite(2T) <= composite(T) exp(-mu T / 4L) (1 + headroom) for every T >= 8L/mu
    whose doubled horizon is also present
    """
    if not mu > 0:
        return []
    by_T = {a.T: a.mean_composite for a in aggregates}
    checks = []
    for T in sorted(by_T):
        if T < 8.0 * L / mu or 2 * T not in by_T:
            continue
        allowed = by_T[T] * math.exp(-mu * T / (4.0 * L)) * (1.0 + headroom)
        checks.append(DecayCheck(T=T, composite_T=by_T[T], composite_2T=by_T[2 * T], allowed=allowed))
    return checks

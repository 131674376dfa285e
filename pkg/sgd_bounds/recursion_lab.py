"""
Recursion Lab Module
Feasible sequences for r_{t+1} <= (1 - a g_t) r_t - b g_t s_t + c g_t^2 and the bounds they must obey

The module is independent of any optimization problem. It draws random
sequences satisfying the recursion, evaluates the weighted error on the left of
every lemma and compares it with the closed-form right sides.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from .averaging import OnlineWeightedMean, averaging_rates, log_weights_from
from .errors import ParameterError, ScheduleError
from .rng import STREAM_RECURSION, derive_seed, rng_stream
from .schedules import (
    StepWeightSchedule,
    constant_log_stepsize,
    decreasing_schedule,
    schedule_rule,
    sublinear_stepsize,
    two_phase_schedule,
    user_constant_schedule,
)

logger = logging.getLogger(__name__)

FEASIBILITY_RTOL = 1e-12
MARGIN_RTOL = 1e-9

SequenceMode = Literal["tight", "slack"]
SStrategy = Literal["uniform", "zero", "max"]

LEMMA_TAGS: Tuple[str, ...] = (
    "constant_log",
    "two_phase",
    "sublinear",
    "unroll",
    "decreasing_linear",
    "decreasing_quadratic",
)
DEFAULT_GATING_LEMMAS: Tuple[str, ...] = ("constant_log", "two_phase", "sublinear", "unroll")

# schedule family each lemma is evaluated on
LEMMA_FAMILIES = {
    "constant_log": "constant_log",
    "two_phase": "two_phase",
    "sublinear": "sublinear",
    "unroll": "user_constant",
    "decreasing_linear": "decreasing",
    "decreasing_quadratic": "decreasing",
}


@dataclass(frozen=True)
class RecursionParams:
    """Constants (a, b, c, d) of the recursion"""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite real, got {value!r}")
            object.__setattr__(self, name, float(value))
        if not self.b > 0:
            raise ParameterError(f"b must be > 0, got {self.b!r}")
        if self.c < 0:
            raise ParameterError(f"c must be >= 0, got {self.c!r}")
        if self.a < 0:
            raise ParameterError(f"a must be >= 0, got {self.a!r}")
        if not self.d > 0:
            raise ParameterError(f"d must be > 0, got {self.d!r}")
        if self.d < self.a:
            raise ParameterError(f"d must satisfy d >= a, got d={self.d!r} < a={self.a!r}")


@dataclass
class SequencePair:
    """r_0..r_{T+1} and s_0..s_T together with the stepsizes that produced them"""

    r: np.ndarray
    s: np.ndarray
    params: RecursionParams
    gammas: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=np.float64)
        self.s = np.asarray(self.s, dtype=np.float64)
        self.gammas = np.asarray(self.gammas, dtype=np.float64)
        if self.s.ndim != 1 or self.s.size == 0:
            raise ParameterError("s must be a non-empty one-dimensional sequence")
        if self.r.shape != (self.s.size + 1,):
            raise ParameterError(f"r must have length T+2={self.s.size + 1}, got {self.r.shape}")
        if self.gammas.shape != self.s.shape:
            raise ParameterError(f"gammas must have length T+1={self.s.size}, got {self.gammas.shape}")
        if np.any(self.r < 0) or np.any(self.s < 0):
            raise ParameterError("r and s must be non-negative")

    @property
    def horizon(self) -> int:
        return self.s.size - 1

    def feasibility_residuals(self) -> np.ndarray:
        """Per-step excess over the recursion's right side; positive entries are violations"""
        return recursion_residual(self.params, self.gammas, self.r[:-1], self.s, self.r[1:])

    def is_feasible(self) -> bool:
        if np.any(self.gammas <= 0) or np.any(self.gammas > 1.0 / self.params.d):
            return False
        return bool(np.all(self.feasibility_residuals() <= 0))


@dataclass(frozen=True)
class VerificationMargin:
    """One lemma left side against its bound"""

    weighted_error: float
    bound_value: float
    margin: float
    schedule_tag: str

    @property
    def passed(self) -> bool:
        return margin_within_tolerance(self.margin, self.bound_value)


def margin_within_tolerance(margin: float, bound: float) -> bool:
    """margin >= -1e-9 * max(1, bound)"""
    return margin >= -MARGIN_RTOL * max(1.0, bound)


def recursion_residual(params: RecursionParams, gammas, r, s, r_next) -> np.ndarray:
    """
    r_{t+1} minus the recursion's right side, less a relative slack of 1e-12

    Args:
        params: Recursion constants
        gammas: Stepsizes, broadcastable against r and s
        r: r_t values
        s: s_t values
        r_next: r_{t+1} values

    Returns:
        Residuals; any entry > 0 is a genuine violation
    """
    keep = (1.0 - params.a * gammas) * r
    drop = params.b * gammas * s
    noise = params.c * gammas * gammas
    scale = np.abs(keep) + drop + noise
    return r_next - (keep - drop + noise) - FEASIBILITY_RTOL * scale


# ---------------------------------------------------------------------------
# sequence generation


def _check_gammas(params: RecursionParams, gammas) -> np.ndarray:
    gammas = np.asarray(gammas, dtype=np.float64)
    if gammas.ndim != 1 or gammas.size == 0:
        raise ScheduleError("gammas must be a non-empty one-dimensional sequence")
    cap = 1.0 / params.d
    if np.any(~(gammas > 0)):
        raise ScheduleError("every gamma_t must be positive")
    if np.any(gammas > cap):
        worst = int(np.argmax(gammas))
        raise ScheduleError(f"gamma_{worst} = {gammas[worst]!r} exceeds 1/d = {cap!r}")
    return gammas


def _advance(
    params: RecursionParams,
    gamma: float,
    r: np.ndarray,
    u_s: np.ndarray,
    u_r: np.ndarray,
    mode: str,
    s_strategy: str,
) -> Tuple[np.ndarray, np.ndarray]:
    """One recursion step for a batch of draws; returns (s_t, r_{t+1})"""
    keep = np.maximum((1.0 - params.a * gamma) * r, 0.0)
    budget = keep + params.c * gamma * gamma
    rate = params.b * gamma
    s_max = budget / rate
    if s_strategy == "uniform":
        s = u_s * s_max
    elif s_strategy == "zero":
        s = np.zeros_like(s_max)
    else:
        s = s_max
    tight = np.maximum(budget - rate * s, 0.0)
    r_next = tight if mode == "tight" else u_r * tight
    return s, r_next


def iterate_recursion(
    params: RecursionParams,
    gammas,
    r0: float,
    mode: SequenceMode,
    rng: np.random.Generator,
    draws: int = 1,
    s_strategy: SStrategy = "uniform",
) -> Iterator[Tuple[int, np.ndarray, np.ndarray, np.ndarray]]:
    """
    Stream a batch of feasible sequences one step at a time

    Both uniforms are consumed at every step regardless of mode and strategy,
    so tight and slack runs from equal generators see matched draws.

    Yields:
        (t, r_t, s_t, r_{t+1}) with arrays of shape (draws,)
    """
    if mode not in ("tight", "slack"):
        raise ParameterError(f"mode must be 'tight' or 'slack', got {mode!r}")
    if s_strategy not in ("uniform", "zero", "max"):
        raise ParameterError(f"s_strategy must be uniform, zero or max, got {s_strategy!r}")
    if not (math.isfinite(r0) and r0 >= 0):
        raise ParameterError(f"r0 must be a finite value >= 0, got {r0!r}")
    if draws < 1:
        raise ParameterError(f"draws must be >= 1, got {draws}")
    gammas = _check_gammas(params, gammas)
    r = np.full(draws, float(r0))
    for t, gamma in enumerate(gammas):
        u = rng.random((2, draws))
        s, r_next = _advance(params, float(gamma), r, u[0], u[1], mode, s_strategy)
        yield t, r, s, r_next
        r = r_next


def generate_feasible_sequence(
    params: RecursionParams,
    gammas,
    r0: float,
    mode: SequenceMode,
    rng: np.random.Generator,
    s_strategy: SStrategy = "uniform",
) -> SequencePair:
    """
    Draw one sequence pair satisfying the recursion

    In tight mode r_{t+1} equals the right side; s_t is uniform on
    [0, ((1 - a g_t) r_t + c g_t^2) / (b g_t)]. Slack mode additionally scales
    r_{t+1} by an independent uniform.

    Args:
        params: Recursion constants
        gammas: Stepsizes in (0, 1/d]
        r0: Starting value, >= 0
        mode: "tight" or "slack"
        rng: Seeded generator
        s_strategy: "uniform" (default), "zero" or "max"

    Returns:
        SequencePair of horizon len(gammas) - 1
    """
    gammas = _check_gammas(params, gammas)
    r = np.empty(gammas.size + 1)
    s = np.empty(gammas.size)
    r[0] = r0
    for t, _, s_t, r_next in iterate_recursion(params, gammas, r0, mode, rng, 1, s_strategy):
        s[t] = s_t[0]
        r[t + 1] = r_next[0]
    return SequencePair(r=r, s=s, params=params, gammas=gammas)


def generate_feasible_batch(
    params: RecursionParams,
    gammas,
    r0: float,
    mode: SequenceMode,
    rng: np.random.Generator,
    draws: int,
    s_strategy: SStrategy = "uniform",
) -> List[SequencePair]:
    """Materialize `draws` sequence pairs from one generator; draw j matches row j of the stream"""
    gammas = _check_gammas(params, gammas)
    r = np.empty((draws, gammas.size + 1))
    s = np.empty((draws, gammas.size))
    r[:, 0] = r0
    for t, _, s_t, r_next in iterate_recursion(params, gammas, r0, mode, rng, draws, s_strategy):
        s[:, t] = s_t
        r[:, t + 1] = r_next
    return [SequencePair(r=r[j], s=s[j], params=params, gammas=gammas) for j in range(draws)]


# ---------------------------------------------------------------------------
# left sides


def weighted_error(
    seq: SequencePair,
    weights: Union[StepWeightSchedule, Sequence[float], np.ndarray],
    T: Optional[int] = None,
) -> float:
    """
    b / W_T * sum_t s_t w_t + a r_{T+1}, normalized online

    Args:
        seq: Sequence pair of horizon T
        weights: Plain non-negative weights of length T+1, or a schedule
        T: Horizon; defaults to the sequence's own

    Returns:
        The weighted error
    """
    horizon = seq.horizon if T is None else int(T)
    if horizon != seq.horizon:
        raise ScheduleError(f"horizon {horizon} does not match the sequence horizon {seq.horizon}")
    if isinstance(weights, StepWeightSchedule):
        log_w = weights.log_weights
    else:
        try:
            log_w = log_weights_from(weights)
        except ValueError as exc:
            raise ParameterError(str(exc)) from None
    if log_w.shape != (horizon + 1,):
        raise ScheduleError(f"weights must have length T+1={horizon + 1}, got {log_w.shape[0]}")
    if not np.any(np.isfinite(log_w)):
        raise ParameterError("at least one weight must be positive")
    mean = OnlineWeightedMean()
    for s_t, lw in zip(seq.s, log_w):
        mean.update(s_t, float(lw))
    return seq.params.b * float(mean.mean) + seq.params.a * float(seq.r[-1])


# ---------------------------------------------------------------------------
# right sides


def _require_decay(params: RecursionParams, lemma: str) -> None:
    if not params.a > 0:
        raise ParameterError(
            f"the {lemma} bound needs a > 0 (got a = {params.a!r}); "
            "use lemma_sublinear_bound for a = 0"
        )


def _require_r0(r0: float) -> None:
    if not (math.isfinite(r0) and r0 >= 0):
        raise ParameterError(f"r0 must be a finite value >= 0, got {r0!r}")


def constant_stepsize_bound(params: RecursionParams, r0: float, gamma: float, T: int) -> float:
    """
    Right side for any constant gamma <= 1/d

    r0/gamma * exp(-a gamma (T+1)) + c gamma when a > 0, and
    r0/(gamma (T+1)) + c gamma when a = 0.
    """
    _require_r0(r0)
    if not 0 < gamma <= 1.0 / params.d:
        raise ParameterError(f"gamma must lie in (0, 1/d], got {gamma!r}")
    if T < 0:
        raise ParameterError(f"T must be >= 0, got {T!r}")
    if params.a > 0:
        return r0 / gamma * math.exp(-params.a * gamma * (T + 1)) + params.c * gamma
    return r0 / (gamma * (T + 1)) + params.c * gamma


def lemma_constant_bound(params: RecursionParams, r0: float, T: int) -> float:
    """Constant-stepsize bound at the log-tuned gamma of constant_log_stepsize"""
    _require_decay(params, "constant-stepsize")
    _require_r0(r0)
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T!r}")
    rule = schedule_rule("constant_log", a=params.a, d=params.d, c=params.c, r0=r0, T=T)
    return constant_stepsize_bound(params, r0, rule.meta["gamma"], T)


def lemma_two_phase_bound(params: RecursionParams, r0: float, T: int) -> float:
    """32 d r0 exp(-aT / 2d) + 36 c / (aT)"""
    _require_decay(params, "two-phase")
    _require_r0(r0)
    if T < 1:
        raise ParameterError(f"the two-phase bound is undefined for T = {T!r}; need T >= 1")
    a, c, d = params.a, params.c, params.d
    return 32.0 * d * r0 * math.exp(-a * T / (2.0 * d)) + 36.0 * c / (a * T)


def lemma_sublinear_bound(params: RecursionParams, r0: float, T: int) -> float:
    """d r0 / (T+1) + 2 sqrt(c r0) / sqrt(T+1)"""
    _require_r0(r0)
    if T < 0:
        raise ParameterError(f"T must be >= 0, got {T!r}")
    return params.d * r0 / (T + 1) + 2.0 * math.sqrt(params.c * r0) / math.sqrt(T + 1)


def lemma_unroll_bound(params: RecursionParams, r0: float, T: int) -> float:
    """Bound on r_T under gamma = 1/d: r0 exp(-aT/d) + c/(ad)"""
    _require_decay(params, "unrolled")
    _require_r0(r0)
    if T < 0:
        raise ParameterError(f"T must be >= 0, got {T!r}")
    return r0 * math.exp(-params.a * T / params.d) + params.c / (params.a * params.d)


def lemma_decreasing_bound(params: RecursionParams, r0: float, T: int) -> float:
    """2 a kappa^2 r0 / T^2 + 2c / (aT) with kappa = 2d/a"""
    _require_decay(params, "decreasing-stepsize")
    _require_r0(r0)
    if T < 1:
        raise ParameterError(f"the decreasing-stepsize bound is undefined for T = {T!r}; need T >= 1")
    kappa = 2.0 * params.d / params.a
    return 2.0 * params.a * kappa * kappa * r0 / (T * T) + 2.0 * params.c / (params.a * T)


_BOUNDS = {
    "constant_log": lemma_constant_bound,
    "two_phase": lemma_two_phase_bound,
    "sublinear": lemma_sublinear_bound,
    "unroll": lemma_unroll_bound,
    "decreasing_linear": lemma_decreasing_bound,
    "decreasing_quadratic": lemma_decreasing_bound,
}


def lemma_bound(lemma: str, params: RecursionParams, r0: float, T: int) -> float:
    """Dispatch to the bound of a lemma tag"""
    try:
        return _BOUNDS[lemma](params, r0, T)
    except KeyError:
        raise ParameterError(f"unknown lemma tag {lemma!r}; expected one of {', '.join(LEMMA_TAGS)}") from None


def lemma_schedule(lemma: str, params: RecursionParams, r0: float, T: int) -> StepWeightSchedule:
    """The schedule a lemma's bound is stated for"""
    if lemma == "constant_log":
        return constant_log_stepsize(params.a, params.d, params.c, r0, T)
    if lemma == "two_phase":
        return two_phase_schedule(params.a, params.d, T)
    if lemma == "sublinear":
        return sublinear_stepsize(params.d, params.c, r0, T)
    if lemma == "unroll":
        _require_decay(params, "unrolled")
        return user_constant_schedule(1.0 / params.d, params.d, params.a, T)
    if lemma == "decreasing_linear":
        return decreasing_schedule(params.a, params.d, T, "linear")
    if lemma == "decreasing_quadratic":
        return decreasing_schedule(params.a, params.d, T, "quadratic")
    raise ParameterError(f"unknown lemma tag {lemma!r}; expected one of {', '.join(LEMMA_TAGS)}")


def _left_side(lemma: str, params: RecursionParams, mean_s, r_T, r_last):
    # sublinear bounds the plain s-average; unroll bounds r_T itself
    if lemma == "sublinear":
        return params.b * mean_s
    if lemma == "unroll":
        return r_T
    return params.b * mean_s + params.a * r_last


def _check_schedule_match(seq: SequencePair, schedule: StepWeightSchedule, lemma: str) -> None:
    if len(schedule) != seq.s.size:
        raise ScheduleError(
            f"schedule horizon {schedule.horizon} does not match the sequence horizon {seq.horizon}"
        )
    if not np.array_equal(schedule.gammas, seq.gammas):
        raise ScheduleError("the sequence was not generated with this schedule's stepsizes")
    if schedule.family != LEMMA_FAMILIES.get(lemma):
        raise ScheduleError(f"lemma {lemma!r} does not apply to a {schedule.family!r} schedule")
    if lemma == "unroll" and not np.all(schedule.gammas == 1.0 / seq.params.d):
        raise ScheduleError("the unrolled bound needs gamma = 1/d at every step")
    if lemma.startswith("decreasing_"):
        wanted = 1.0 if lemma == "decreasing_linear" else 2.0
        if schedule.meta.get("weight_power") != wanted:
            raise ScheduleError(f"lemma {lemma!r} needs {lemma.split('_')[1]} weights")


def verify_lemma(seq: SequencePair, schedule: StepWeightSchedule, bound_kind: str) -> VerificationMargin:
    """
    Compare one sequence against the bound of a lemma

    Args:
        seq: Sequence generated with the schedule's stepsizes
        schedule: Schedule of the family the lemma is stated for
        bound_kind: Lemma tag

    Returns:
        VerificationMargin with margin = bound - left side
    """
    if bound_kind not in LEMMA_TAGS:
        raise ParameterError(f"unknown lemma tag {bound_kind!r}; expected one of {', '.join(LEMMA_TAGS)}")
    _check_schedule_match(seq, schedule, bound_kind)
    r0 = float(seq.r[0])
    bound = lemma_bound(bound_kind, seq.params, r0, seq.horizon)
    mean = OnlineWeightedMean()
    for s_t, lw in zip(seq.s, schedule.log_weights):
        mean.update(s_t, float(lw))
    lhs = float(_left_side(bound_kind, seq.params, float(mean.mean), float(seq.r[-2]), float(seq.r[-1])))
    return VerificationMargin(
        weighted_error=lhs,
        bound_value=bound,
        margin=bound - lhs,
        schedule_tag=bound_kind,
    )


# ---------------------------------------------------------------------------
# campaigns


@dataclass(frozen=True)
class RecursionCell:
    """One point of the verification grid"""

    index: int
    params: RecursionParams
    T: int
    r0: float = 1.0


@dataclass
class LemmaOutcome:
    """Worst draw of one (cell, lemma, mode) triple, or the reason it was skipped"""

    lemma_tag: str
    cell: RecursionCell
    mode: str
    seed: int
    gating: bool
    draws: int = 0
    weighted_error: float = math.nan
    bound: float = math.nan
    margin: float = math.nan
    infeasible_steps: int = 0
    degenerate: bool = False
    skipped_reason: Optional[str] = None
    per_draw: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def skipped(self) -> bool:
        return self.skipped_reason is not None

    @property
    def passed(self) -> bool:
        if self.skipped:
            return True
        return self.infeasible_steps == 0 and margin_within_tolerance(self.margin, self.bound)


def lemma_precondition(lemma: str, params: RecursionParams, r0: float, T: int) -> Optional[str]:
    """Reason a lemma cannot be evaluated on a cell, or None"""
    if lemma in ("constant_log", "two_phase", "unroll", "decreasing_linear", "decreasing_quadratic"):
        if not params.a > 0:
            return f"{lemma} needs a > 0"
    if lemma in ("constant_log", "two_phase", "decreasing_linear", "decreasing_quadratic") and T < 1:
        return f"{lemma} needs T >= 1"
    return None


def run_lemma_cell(
    cell: RecursionCell,
    lemma: str,
    modes: Sequence[str],
    draws: int,
    master_seed: int,
    gating: bool = True,
    chunk: int = 4096,
    s_strategy: SStrategy = "uniform",
    per_draw_rows: bool = False,
) -> List[LemmaOutcome]:
    """
    Run `draws` random feasible sequences of one cell through one lemma

    Draws are processed in chunks, each with its own Philox stream keyed by
    (master_seed, recursion, cell, chunk); every lemma and mode of the cell
    replays the same streams. Sequences are never materialized.

    Returns:
        One LemmaOutcome per mode
    """
    seed = derive_seed(master_seed, STREAM_RECURSION, cell.index)
    reason = lemma_precondition(lemma, cell.params, cell.r0, cell.T)
    if reason is not None:
        return [
            LemmaOutcome(lemma_tag=lemma, cell=cell, mode=mode, seed=seed, gating=gating, skipped_reason=reason)
            for mode in modes
        ]

    schedule = lemma_schedule(lemma, cell.params, cell.r0, cell.T)
    bound = lemma_bound(lemma, cell.params, cell.r0, cell.T)
    rates = averaging_rates(schedule.log_weights)
    # degenerate schedules carry no guarantee of their own
    gating = gating and not (lemma == "sublinear" and schedule.degenerate)

    outcomes = []
    for mode in modes:
        outcome = LemmaOutcome(
            lemma_tag=lemma,
            cell=cell,
            mode=mode,
            seed=seed,
            gating=gating,
            bound=bound,
            degenerate=schedule.degenerate,
            margin=math.inf,
        )
        for chunk_index, start in enumerate(range(0, draws, chunk)):
            size = min(chunk, draws - start)
            rng = rng_stream(master_seed, STREAM_RECURSION, cell.index, chunk_index)
            mean_s = np.zeros(size)
            r_T = np.full(size, cell.r0)
            r_last = r_T
            for t, r_t, s_t, r_next in iterate_recursion(
                cell.params, schedule.gammas, cell.r0, mode, rng, size, s_strategy
            ):
                gamma = schedule.gammas[t]
                outcome.infeasible_steps += int(
                    np.count_nonzero(recursion_residual(cell.params, gamma, r_t, s_t, r_next) > 0)
                )
                rho = rates[t]
                if rho >= 1.0:
                    mean_s = s_t.copy()
                elif rho > 0.0:
                    mean_s = (1.0 - rho) * mean_s + rho * s_t
                if t == cell.T:
                    r_T = r_t
                r_last = r_next
            lhs = _left_side(lemma, cell.params, mean_s, r_T, r_last)
            margins = bound - lhs
            worst = int(np.argmin(margins))
            if margins[worst] < outcome.margin:
                outcome.margin = float(margins[worst])
                outcome.weighted_error = float(lhs[worst])
            if per_draw_rows:
                outcome.per_draw.extend(zip(lhs.tolist(), margins.tolist()))
            outcome.draws += size
        if not outcome.passed:
            logger.warning(
                "lemma %s violated on cell %d (mode %s): margin %.3e against bound %.3e",
                lemma,
                cell.index,
                mode,
                outcome.margin,
                bound,
            )
        outcomes.append(outcome)
    return outcomes

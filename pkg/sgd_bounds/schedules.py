"""
Schedules Module
Stepsize and averaging-weight sequences for a finite horizon

Every family is described by a rule that maps step indices to (gamma_t, log w_t).
Rules are materialized into a StepWeightSchedule for ordinary horizons and can
be streamed chunk by chunk for very long ones. Weights are kept in log space
because the exponential families overflow float64 for modest T.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterator, Literal, Tuple

import numpy as np

from .errors import ParameterError, ScheduleError

logger = logging.getLogger(__name__)

ScheduleFamily = Literal[
    "constant_log",
    "two_phase",
    "sublinear",
    "user_constant",
    "classic_constant",
    "decreasing",
]

SCHEDULE_FAMILIES: Tuple[str, ...] = (
    "constant_log",
    "two_phase",
    "sublinear",
    "user_constant",
    "classic_constant",
    "decreasing",
)

MAX_MATERIALIZED_HORIZON = 10**7
DEFAULT_CHUNK = 1 << 16

RuleFn = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class StepWeightSchedule:
    """Materialized stepsizes gamma_0..gamma_T and log-weights for one horizon"""

    gammas: np.ndarray
    log_weights: np.ndarray
    family: str
    horizon: int
    cap: float
    degenerate: bool = False
    meta: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        gammas = np.array(self.gammas, dtype=np.float64)
        log_weights = np.array(self.log_weights, dtype=np.float64)
        size = self.horizon + 1
        if gammas.shape != (size,) or log_weights.shape != (size,):
            raise ScheduleError(
                f"schedule arrays must have length T+1={size}, "
                f"got gammas {gammas.shape} and weights {log_weights.shape}"
            )
        if np.any(~(gammas > 0)):
            raise ScheduleError("every gamma_t must be positive")
        if np.any(gammas > self.cap):
            worst = int(np.argmax(gammas))
            raise ScheduleError(
                f"gamma_{worst} = {gammas[worst]!r} exceeds the cap 1/d = {self.cap!r}"
            )
        if not np.any(np.isfinite(log_weights)):
            raise ScheduleError("at least one averaging weight must be positive")
        if np.any(np.isnan(log_weights)) or np.any(log_weights == np.inf):
            raise ScheduleError("log-weights must be finite or -inf")
        gammas.setflags(write=False)
        log_weights.setflags(write=False)
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "log_weights", log_weights)

    @property
    def weights(self) -> np.ndarray:
        """Plain weights; exponential families may overflow to inf here"""
        with np.errstate(over="ignore"):
            return np.exp(self.log_weights)

    @property
    def d(self) -> float:
        return 1.0 / self.cap

    def __len__(self) -> int:
        return self.horizon + 1

    def to_csv(self, path: Path) -> Path:
        """Write the schedule as CSV with columns t, gamma, weight"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["t", "gamma", "weight"])
            for t, (gamma, weight) in enumerate(zip(self.gammas, self.weights)):
                writer.writerow([t, repr(float(gamma)), repr(float(weight))])
        return path


@dataclass(frozen=True)
class ScheduleRule:
    """Closed-form description of a schedule, evaluated lazily on index arrays"""

    family: str
    horizon: int
    cap: float
    evaluate: RuleFn
    degenerate: bool = False
    meta: Dict[str, float] = field(default_factory=dict)

    def materialize(self) -> StepWeightSchedule:
        if self.horizon > MAX_MATERIALIZED_HORIZON:
            raise ScheduleError(
                f"horizon {self.horizon} is above {MAX_MATERIALIZED_HORIZON}; "
                "use stream_schedule() instead"
            )
        gammas, log_weights = self.evaluate(np.arange(self.horizon + 1, dtype=np.int64))
        return StepWeightSchedule(
            gammas=gammas,
            log_weights=log_weights,
            family=self.family,
            horizon=self.horizon,
            cap=self.cap,
            degenerate=self.degenerate,
            meta=dict(self.meta),
        )

    def iter_chunks(self, chunk: int = DEFAULT_CHUNK) -> Iterator[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Yield (t, gamma, log_weight) blocks covering 0..T"""
        if chunk < 1:
            raise ParameterError(f"chunk must be >= 1, got {chunk}")
        for start in range(0, self.horizon + 1, chunk):
            t = np.arange(start, min(start + chunk, self.horizon + 1), dtype=np.int64)
            gammas, log_weights = self.evaluate(t)
            yield t, gammas, log_weights


# ---------------------------------------------------------------------------
# argument checks


def _require_horizon(T: int, minimum: int) -> int:
    if int(T) != T or T < minimum:
        raise ParameterError(f"horizon T must be an integer >= {minimum}, got {T!r}")
    return int(T)


def _require_positive_a(a: float, hint: str) -> None:
    if not a > 0:
        raise ParameterError(f"a must be > 0 (got {a!r}); {hint}")


def _require_cap(a: float, d: float) -> None:
    if not d > 0:
        raise ParameterError(f"d must be > 0, got {d!r}")
    if d < a:
        raise ParameterError(f"d must satisfy d >= a, got d={d!r} < a={a!r}")


def _log_ratio_or_inf(numerator: float, denominator: float) -> float:
    # ln(max{2, numerator/denominator}) with x/0 read as +inf
    if denominator == 0:
        return math.inf
    return math.log(max(2.0, numerator / denominator))


# ---------------------------------------------------------------------------
# weight shapes


def _exponential_log_weights(a: float, gamma: float, t: np.ndarray, horizon: int) -> Tuple[np.ndarray, bool]:
    """log (1 - a gamma)^-(t+1); degenerates to last-iterate weighting when a gamma = 1"""
    a_gamma = a * gamma
    if a_gamma >= 1.0:
        return _last_iterate_log_weights(t, horizon), True
    return -(t + 1.0) * math.log1p(-a_gamma), False


def _last_iterate_log_weights(t: np.ndarray, horizon: int) -> np.ndarray:
    return np.where(t == horizon, 0.0, -np.inf)


def _uniform_log_weights(t: np.ndarray) -> np.ndarray:
    return np.zeros(t.shape, dtype=np.float64)


def _constant(gamma: float, t: np.ndarray) -> np.ndarray:
    return np.full(t.shape, gamma, dtype=np.float64)


# ---------------------------------------------------------------------------
# rules


def _constant_log_rule(a: float, d: float, c: float, r0: float, T: int) -> ScheduleRule:
    _require_positive_a(a, "use sublinear_stepsize for a = 0")
    _require_cap(a, d)
    T = _require_horizon(T, 1)
    if r0 < 0:
        raise ParameterError(f"r0 must be >= 0, got {r0!r}")
    if c < 0:
        raise ParameterError(f"c must be >= 0, got {c!r}")
    cap = 1.0 / d
    tuned = _log_ratio_or_inf(a * a * r0 * T * T, c) / (a * T)
    gamma = min(cap, tuned)
    degenerate = a * gamma >= 1.0

    def evaluate(t: np.ndarray):
        log_w, _ = _exponential_log_weights(a, gamma, t, T)
        return _constant(gamma, t), log_w

    return ScheduleRule(
        family="constant_log",
        horizon=T,
        cap=cap,
        evaluate=evaluate,
        degenerate=degenerate,
        meta={"gamma": gamma, "gamma_tuned": tuned},
    )


def _two_phase_rule(a: float, d: float, T: int) -> ScheduleRule:
    _require_positive_a(a, "the two-phase schedule needs a positive decay rate")
    _require_cap(a, d)
    T = _require_horizon(T, 0)
    cap = 1.0 / d

    if T <= d / a:
        degenerate = a * cap >= 1.0

        def evaluate(t: np.ndarray):
            log_w, _ = _exponential_log_weights(a, cap, t, T)
            return _constant(cap, t), log_w

        return ScheduleRule(
            family="two_phase",
            horizon=T,
            cap=cap,
            evaluate=evaluate,
            degenerate=degenerate,
            meta={"t0": 0.0, "kappa": 2.0 * d / a, "phase_split": 0.0},
        )

    t0 = (T + 1) // 2  # ceil(T / 2)
    kappa = 2.0 * d / a

    def evaluate(t: np.ndarray):
        k = (t - t0).astype(np.float64)
        second = t >= t0
        shifted = kappa + np.where(second, k, 0.0)
        # min() keeps gamma_t0 from rounding above 1/d
        gammas = np.where(second, np.minimum(cap, 2.0 / (a * shifted)), cap)
        log_w = np.where(second, 2.0 * np.log(shifted), -np.inf)
        return gammas, log_w

    return ScheduleRule(
        family="two_phase",
        horizon=T,
        cap=cap,
        evaluate=evaluate,
        meta={"t0": float(t0), "kappa": kappa, "phase_split": 1.0},
    )


def _sublinear_rule(d: float, c: float, r0: float, T: int) -> ScheduleRule:
    if not d > 0:
        raise ParameterError(f"d must be > 0, got {d!r}")
    if c < 0:
        raise ParameterError(f"c must be >= 0, got {c!r}")
    if r0 < 0:
        raise ParameterError(f"r0 must be >= 0, got {r0!r}")
    T = _require_horizon(T, 0)
    cap = 1.0 / d
    degenerate = False
    if c == 0:
        gamma = cap
    elif r0 == 0:
        logger.debug("sublinear schedule with r0 = 0 and c > 0 falls back to gamma = 1/d")
        gamma = cap
        degenerate = True
    else:
        threshold = r0 / (c * (T + 1))
        gamma = cap if cap * cap <= threshold else math.sqrt(threshold)

    def evaluate(t: np.ndarray):
        return _constant(gamma, t), _uniform_log_weights(t)

    return ScheduleRule(
        family="sublinear",
        horizon=T,
        cap=cap,
        evaluate=evaluate,
        degenerate=degenerate,
        meta={"gamma": gamma},
    )


def _classic_constant_rule(mu: float, L: float, R2: float, sigma2: float, T: int) -> ScheduleRule:
    if not mu > 0:
        raise ParameterError(f"mu must be > 0 for the classic constant stepsize, got {mu!r}")
    if not L > 0:
        raise ParameterError(f"L must be > 0, got {L!r}")
    if R2 < 0 or sigma2 < 0:
        raise ParameterError("R2 and sigma2 must be non-negative")
    T = _require_horizon(T, 1)
    cap = 1.0 / (2.0 * L)
    tuned = _log_ratio_or_inf(mu * mu * R2 * T, sigma2) / (mu * T)
    gamma = min(cap, tuned)

    def evaluate(t: np.ndarray):
        return _constant(gamma, t), _last_iterate_log_weights(t, T)

    return ScheduleRule(
        family="classic_constant",
        horizon=T,
        cap=cap,
        evaluate=evaluate,
        meta={"gamma": gamma, "gamma_tuned": tuned},
    )


def _user_constant_rule(gamma: float, d: float, a: float, T: int) -> ScheduleRule:
    _require_cap(a, d)
    T = _require_horizon(T, 0)
    cap = 1.0 / d
    if not 0 < gamma <= cap:
        raise ParameterError(f"constant gamma must lie in (0, 1/d = {cap!r}], got {gamma!r}")
    degenerate = a > 0 and a * gamma >= 1.0

    def evaluate(t: np.ndarray):
        if a > 0:
            log_w, _ = _exponential_log_weights(a, gamma, t, T)
        else:
            log_w = _uniform_log_weights(t)
        return _constant(gamma, t), log_w

    return ScheduleRule(
        family="user_constant",
        horizon=T,
        cap=cap,
        evaluate=evaluate,
        degenerate=degenerate,
        meta={"gamma": gamma},
    )


def _decreasing_rule(a: float, d: float, T: int, weights: str) -> ScheduleRule:
    _require_positive_a(a, "decreasing stepsizes 2/(a(kappa+t)) need a > 0")
    _require_cap(a, d)
    T = _require_horizon(T, 0)
    if weights not in ("linear", "quadratic"):
        raise ParameterError(f"weights must be 'linear' or 'quadratic', got {weights!r}")
    cap = 1.0 / d
    kappa = 2.0 * d / a
    power = 1.0 if weights == "linear" else 2.0

    def evaluate(t: np.ndarray):
        shifted = kappa + t.astype(np.float64)
        return np.minimum(cap, 2.0 / (a * shifted)), power * np.log(shifted)

    return ScheduleRule(
        family="decreasing",
        horizon=T,
        cap=cap,
        evaluate=evaluate,
        meta={"kappa": kappa, "weight_power": power},
    )


# ---------------------------------------------------------------------------
# public builders


def constant_log_stepsize(a: float, d: float, c: float, r0: float, T: int) -> StepWeightSchedule:
    """
    Tuned constant stepsize with exponential weights

    gamma = min{1/d, ln(max{2, a^2 r0 T^2 / c}) / (aT)}, with c = 0 read as an
    infinite ratio so the cap branch is taken. Weights are (1 - a gamma)^-(t+1).

    Args:
        a: Decay rate, > 0
        d: Stepsize-cap parameter, d >= a
        c: Noise coefficient, >= 0
        r0: Initial value of the r-sequence, >= 0
        T: Horizon, >= 1

    Returns:
        Materialized schedule of family "constant_log"
    """
    return _constant_log_rule(a, d, c, r0, T).materialize()


def two_phase_schedule(a: float, d: float, T: int) -> StepWeightSchedule:
    """
    Two-phase schedule: constant 1/d, then decreasing steps with suffix weights

    For T <= d/a the schedule is gamma = 1/d with exponential weights. Otherwise
    t0 = ceil(T/2), kappa = 2d/a; steps before t0 use 1/d with zero weight and
    steps t >= t0 use 2/(a(kappa + t - t0)) with weight (kappa + t - t0)^2.
    """
    return _two_phase_rule(a, d, T).materialize()


def sublinear_stepsize(d: float, c: float, r0: float, T: int) -> StepWeightSchedule:
    """Constant stepsize for the a = 0 recursion with uniform weights"""
    return _sublinear_rule(d, c, r0, T).materialize()


def classic_constant_stepsize(mu: float, L: float, R2: float, sigma2: float, T: int) -> StepWeightSchedule:
    """Constant stepsize behind the last-iterate distance bound; all weight on t = T"""
    return _classic_constant_rule(mu, L, R2, sigma2, T).materialize()


def user_constant_schedule(gamma: float, d: float, a: float, T: int) -> StepWeightSchedule:
    """Caller-chosen constant gamma; exponential weights for a > 0, uniform for a = 0"""
    return _user_constant_rule(gamma, d, a, T).materialize()


def decreasing_schedule(a: float, d: float, T: int, weights: str = "linear") -> StepWeightSchedule:
    """gamma_t = 2/(a(kappa + t)), kappa = 2d/a, with weights (kappa + t) or (kappa + t)^2"""
    return _decreasing_rule(a, d, T, weights).materialize()


_RULES: Dict[str, Callable[..., ScheduleRule]] = {
    "constant_log": _constant_log_rule,
    "two_phase": _two_phase_rule,
    "sublinear": _sublinear_rule,
    "classic_constant": _classic_constant_rule,
    "user_constant": _user_constant_rule,
    "decreasing": _decreasing_rule,
}


def schedule_rule(family: str, **params) -> ScheduleRule:
    """Look up a family by name and build its rule from keyword parameters"""
    try:
        builder = _RULES[family]
    except KeyError:
        raise ScheduleError(
            f"unknown schedule family {family!r}; expected one of {', '.join(SCHEDULE_FAMILIES)}"
        ) from None
    return builder(**params)


def iter_schedule_chunks(rule: ScheduleRule, chunk: int = DEFAULT_CHUNK) -> Iterator[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Stream (t, gamma, log_weight) chunks of a rule for horizons too long to materialize"""
    return rule.iter_chunks(chunk)


def stream_schedule(family: str, chunk: int = DEFAULT_CHUNK, **params) -> Iterator[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Build a family rule by name and stream it"""
    return iter_schedule_chunks(schedule_rule(family, **params), chunk)

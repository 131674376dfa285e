import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.special import logsumexp

from sgd_bounds.engine import (
    RunConfig,
    descent_step_margin,
    last_iterate_distance_bound,
    interpolation_decay_checks,
    recursion_params_for,
    run_campaign,
    run_sgd,
    schedule_for_oracle,
    simulate_replicates,
    theorem_bound,
)
from sgd_bounds.errors import ConfigurationError, NumericalFailure, ParameterError
from sgd_bounds.oracles import make_noisy_quadratic
from sgd_bounds.schedules import classic_constant_stepsize, two_phase_schedule, user_constant_schedule


@pytest.fixture
def halving_config():
    """Fixture: gamma = 1/2 on the unit quadratic halves the iterate every step"""
    T = 10
    return RunConfig(
        horizon=T,
        schedule=user_constant_schedule(0.5, 2.0, 1.0, T),
        record_trajectory=True,
        descent_check=True,
    )


# ------------------------ run_sgd tests ------------------------

def test_run_sgd_halves_the_iterate(unit_quadratic, halving_config):
    """run_sgd: x_t = 2^-t on f = x^2/2 with gamma = 1/2"""
    result = run_sgd(unit_quadratic, [1.0], halving_config)
    expected = 0.5 ** np.arange(halving_config.horizon + 2)
    np.testing.assert_array_equal(result.trajectory[:, 0], expected)
    assert result.dist_sq_last == 4.0 ** -(halving_config.horizon + 1)
    assert result.dist_sq_last <= last_iterate_distance_bound(1.0, 1.0, 0.0, 0.5, halving_config.horizon)


def test_run_sgd_descent_margins_are_tight_on_the_unit_quadratic(unit_quadratic, halving_config):
    """run_sgd: every descent margin vanishes when gamma = 1/(2L) on f = x^2/2"""
    result = run_sgd(unit_quadratic, [1.0], halving_config)
    np.testing.assert_allclose(result.descent_margins, 0.0, atol=1e-15)


def test_run_sgd_last_iterate_weights():
    """run_sgd: classic_constant averages only x_T"""
    oracle = make_noisy_quadratic([0.1, 1.0])
    T = 20
    schedule = classic_constant_stepsize(oracle.mu, oracle.L, 1.0, 0.0, T)
    result = run_sgd(oracle, [1.0, 0.0], RunConfig(horizon=T, schedule=schedule, record_trajectory=True))
    np.testing.assert_array_equal(result.x_avg, result.trajectory[T])
    assert result.f_gap_avg == pytest.approx(float(oracle.value(result.trajectory[T])), rel=1e-15)


@pytest.mark.parametrize(
    "family, T, gamma",
    [
        ("constant_log", 10_000, None),
        ("two_phase", 10_000, None),
        ("user_constant", 10_000, 0.5),
        ("sublinear", 1000, None),
        ("decreasing", 1000, None),
    ],
)
def test_online_average_matches_two_pass_weighted_mean(family, T, gamma):
    """simulate_replicates: the online x_avg equals the log-normalized weighted mean of the trajectory"""
    oracle = make_noisy_quadratic([0.5, 1.0], sigma2=0.25)
    schedule = schedule_for_oracle(family, oracle, 1.0, T, gamma=gamma)
    x0 = [1.0, 0.0]
    outcome = simulate_replicates(oracle, x0, schedule, 5, [0, 1], record_trajectory=True)

    lw = schedule.log_weights
    if family == "user_constant":
        assert lw.max() > 709.0  # exp() of these overflows float64
    weights = np.exp(lw - logsumexp(lw))
    for r in range(2):
        iterates = outcome.trajectory[r, : T + 1]
        x_ref = weights @ iterates
        scale = float(np.abs(iterates).max())
        np.testing.assert_allclose(outcome.x_avg[r], x_ref, rtol=1e-9, atol=1e-12 * scale)
        f_gap_ref = float(oracle.value(x_ref)) - oracle.f_star
        composite_ref = f_gap_ref + oracle.mu * float(oracle.distance_sq(outcome.trajectory[r, T + 1]))
        assert outcome.f_gap_avg[r] == pytest.approx(f_gap_ref, rel=1e-9)
        assert outcome.composite[r] == pytest.approx(composite_ref, rel=1e-9)


def test_run_sgd_rejects_stepsizes_above_half_inverse_L(unit_quadratic):
    """run_sgd: gamma > 1/(2L) is a configuration error"""
    schedule = user_constant_schedule(0.9, 1.0, 1.0, 5)
    with pytest.raises(ConfigurationError, match="1/\\(2L\\)"):
        run_sgd(unit_quadratic, [1.0], RunConfig(horizon=5, schedule=schedule))


def test_run_config_checks_horizon():
    """RunConfig: the schedule horizon must equal T"""
    with pytest.raises(ConfigurationError):
        RunConfig(horizon=4, schedule=two_phase_schedule(1.0, 2.0, 5))


def test_run_sgd_rejects_wrong_start_shape(unit_quadratic, halving_config):
    """run_sgd: x0 must live in the oracle's space"""
    with pytest.raises(ConfigurationError):
        run_sgd(unit_quadratic, [1.0, 2.0], halving_config)


def test_run_sgd_reports_overflow(unit_quadratic):
    """run_sgd: non-finite metrics raise NumericalFailure"""
    cfg = RunConfig(horizon=1, schedule=user_constant_schedule(0.5, 2.0, 1.0, 1))
    with np.errstate(over="ignore"), pytest.raises(NumericalFailure):
        run_sgd(unit_quadratic, [1e300], cfg)


def test_descent_check_needs_deterministic_oracle(noisy_unit_quadratic):
    """simulate_replicates: descent margins are pathwise only without noise"""
    schedule = user_constant_schedule(0.5, 2.0, 1.0, 3)
    with pytest.raises(ConfigurationError):
        simulate_replicates(noisy_unit_quadratic, [1.0], schedule, 0, [0], descent_check=True)


# ------------------------ descent_step_margin tests ------------------------

def test_descent_step_margin_examples(unit_quadratic):
    """descent_step_margin: 0 for the halving step and at x*"""
    assert descent_step_margin(unit_quadratic, [1.0], [0.5], 0.5) == 0.0
    assert descent_step_margin(unit_quadratic, [0.0], None, 0.25, g=[0.0]) == 0.0


def test_descent_step_margin_is_non_negative_below_cap():
    """descent_step_margin: positive for small steps on an ill-conditioned quadratic"""
    oracle = make_noisy_quadratic([0.1, 1.0])
    x = np.array([1.0, -2.0])
    for gamma in (0.5, 0.25, 0.01):
        margin = descent_step_margin(oracle, x, None, gamma, g=oracle.full_gradient(x))
        assert margin >= -1e-12


def test_descent_step_margin_errors(unit_quadratic, noisy_unit_quadratic):
    """descent_step_margin: stochastic oracles and missing steps are rejected"""
    with pytest.raises(ParameterError):
        descent_step_margin(noisy_unit_quadratic, [1.0], [0.5], 0.5)
    with pytest.raises(ParameterError):
        descent_step_margin(unit_quadratic, [1.0], None, 0.5)


# ------------------------ bound tests ------------------------

def test_theorem_bound_example():
    """theorem_bound: mu = L = R = sigma2 = 1, T = 100 -> branches 0.36 and 0.22"""
    report = theorem_bound(1.0, 1.0, 1.0, 1.0, 100)
    assert report.theorem_branch_exp == pytest.approx(0.36 + 64 * math.exp(-25), rel=1e-12)
    assert report.theorem_branch_sub == pytest.approx(0.22, rel=1e-12)
    assert report.theorem_min == report.theorem_branch_sub
    assert report.improved_informational == pytest.approx(math.exp(-100) + 0.01, rel=1e-12)


def test_theorem_bound_distance_term():
    """theorem_bound: an explicit gamma is used in the last-iterate distance bound"""
    report = theorem_bound(1.0, 1.0, 1.0, 1.0, 100, gamma=0.1)
    assert report.distance_gamma == 0.1
    assert report.last_iterate_distance_bound == pytest.approx(0.9**100 + 0.1, rel=1e-12)
    noiseless = theorem_bound(1.0, 1.0, 1.0, 0.0, 100)
    assert noiseless.last_iterate_distance_bound == pytest.approx((1 - noiseless.distance_gamma) ** 100, rel=1e-12)


def test_theorem_bound_without_strong_convexity():
    """theorem_bound: mu = 0 drops the exponential branch"""
    report = theorem_bound(0.0, 1.0, 1.0, 1.0, 100)
    assert report.theorem_branch_exp == math.inf
    assert report.theorem_min == report.theorem_branch_sub
    assert report.last_iterate_distance_bound is None
    assert report.improved_informational is None


def test_theorem_bound_rejects_bad_constants():
    """theorem_bound: T >= 1 and non-negative constants"""
    with pytest.raises(ParameterError):
        theorem_bound(1.0, 1.0, 1.0, 1.0, 0)
    with pytest.raises(ParameterError):
        theorem_bound(1.0, 0.0, 1.0, 1.0, 10)
    with pytest.raises(ParameterError):
        last_iterate_distance_bound(0.0, 1.0, 1.0, 0.1, 10)


# ------------------------ schedule wiring tests ------------------------

def test_recursion_params_for_oracle(noisy_unit_quadratic):
    """recursion_params_for: a = mu, b = 1, c = sigma2, d = 2L"""
    params = recursion_params_for(noisy_unit_quadratic)
    assert (params.a, params.b, params.c, params.d) == (1.0, 1.0, 1.0, 2.0)


@pytest.mark.parametrize("family", ["two_phase", "sublinear", "constant_log", "classic_constant", "decreasing"])
def test_schedule_for_oracle_respects_cap(family):
    """schedule_for_oracle: every family stays below 1/(2L)"""
    oracle = make_noisy_quadratic([0.1, 1.0], sigma2=1.0)
    schedule = schedule_for_oracle(family, oracle, 1.0, 50)
    assert schedule.family == family
    assert np.all(schedule.gammas <= 1.0 / (2.0 * oracle.L))


def test_schedule_for_oracle_errors(unit_quadratic):
    """schedule_for_oracle: unknown families and user_constant without gamma"""
    with pytest.raises(ConfigurationError):
        schedule_for_oracle("adam", unit_quadratic, 1.0, 10)
    with pytest.raises(ConfigurationError):
        schedule_for_oracle("user_constant", unit_quadratic, 1.0, 10)


# ------------------------ run_campaign tests ------------------------

def test_campaign_on_deterministic_oracle_has_zero_spread(unit_quadratic):
    """run_campaign: sigma2 = 0 gives identical replicates and a zero CI"""
    cfg = RunConfig(horizon=10, schedule=two_phase_schedule(1.0, 2.0, 10))
    aggregate = run_campaign(unit_quadratic, [1.0], cfg, 5, master_seed=3)
    assert aggregate.std_composite == 0.0
    assert aggregate.ci_composite == 0.0
    assert len({row.composite for row in aggregate.replicates}) == 1
    assert aggregate.R == 1.0
    assert aggregate.ratio < 1.0
    assert aggregate.passed


def test_campaign_is_deterministic(noisy_unit_quadratic):
    """run_campaign: same seed, same numbers"""
    cfg = RunConfig(horizon=50, schedule=schedule_for_oracle("two_phase", noisy_unit_quadratic, 1.0, 50))
    first = run_campaign(noisy_unit_quadratic, [1.0], cfg, 8, master_seed=17)
    second = run_campaign(noisy_unit_quadratic, [1.0], cfg, 8, master_seed=17)
    assert first.mean_composite == second.mean_composite
    assert [r.composite for r in first.replicates] == [r.composite for r in second.replicates]
    other = run_campaign(noisy_unit_quadratic, [1.0], cfg, 8, master_seed=18)
    assert other.mean_composite != first.mean_composite


def test_campaign_replicate_matches_single_run(noisy_unit_quadratic):
    """run_campaign: replicate r sees the same gradients as run_sgd with replicate_index r"""
    schedule = schedule_for_oracle("sublinear", noisy_unit_quadratic, 1.0, 300)
    aggregate = run_campaign(noisy_unit_quadratic, [1.0], RunConfig(horizon=300, schedule=schedule), 4, 9)
    single = run_sgd(
        noisy_unit_quadratic,
        [1.0],
        RunConfig(horizon=300, schedule=schedule, replicate_seed=9, replicate_index=2),
    )
    assert single.composite == pytest.approx(aggregate.replicates[2].composite, rel=1e-12)


def test_campaign_rejects_zero_replicates(unit_quadratic):
    """run_campaign: replicates must be >= 1"""
    cfg = RunConfig(horizon=10, schedule=two_phase_schedule(1.0, 2.0, 10))
    with pytest.raises(ConfigurationError, match="replicates"):
        run_campaign(unit_quadratic, [1.0], cfg, 0, master_seed=0)


def test_campaign_family_checks():
    """run_campaign: each family carries its own bound check"""
    oracle = make_noisy_quadratic([0.1, 1.0])
    x0 = [1.0, 1.0]
    expected = {
        "two_phase": "composite<=theorem_min",
        "sublinear": "f_gap_avg<=theorem_branch_sub",
        "constant_log": "composite<=constant_stepsize_bound",
        "classic_constant": "dist_sq_last<=last_iterate_distance_bound",
        "decreasing": "composite<=decreasing_bound",
    }
    R = math.sqrt(2.0)
    for family, name in expected.items():
        schedule = schedule_for_oracle(family, oracle, R, 100)
        aggregate = run_campaign(oracle, x0, RunConfig(horizon=100, schedule=schedule), 1, 0)
        assert [check.name for check in aggregate.checks] == [name]
        assert aggregate.checks[0].passed, family
        assert name in aggregate.bounds.measured_over_bound


# ------------------------ decay tests ------------------------

def test_interpolation_decay_checks():
    """interpolation_decay_checks: only T >= 8L/mu with 2T present is checked"""
    aggregates = [
        SimpleNamespace(T=4, mean_composite=2.0),
        SimpleNamespace(T=8, mean_composite=1.0),
        SimpleNamespace(T=16, mean_composite=0.1),
        SimpleNamespace(T=32, mean_composite=0.05),
    ]
    checks = interpolation_decay_checks(aggregates, 1.0, 1.0)
    assert [check.T for check in checks] == [8, 16]
    assert checks[0].passed
    assert checks[0].allowed == pytest.approx(math.exp(-2.0) * 1.1)
    assert not checks[1].passed
    assert interpolation_decay_checks(aggregates, 0.0, 1.0) == []

"""
Full-size campaigns from configs/, run through the command-line entry point
"""
import csv
from pathlib import Path

import numpy as np
import pytest

from sgd_bounds.cli import EXIT_OK, main
from sgd_bounds.engine import RunConfig, run_sgd
from sgd_bounds.oracles import make_noisy_quadratic
from sgd_bounds.rng import STREAM_START_POINT, rng_stream
from sgd_bounds.schedules import user_constant_schedule

CONFIGS_DIR = Path(__file__).resolve().parents[2] / "configs"

pytestmark = pytest.mark.slow


def run_config(command: str, name: str, out: Path, *extra: str) -> int:
    return main([command, "--config", str(CONFIGS_DIR / name), "--out", str(out), *extra])


def read_rows(path: Path):
    with Path(path).open() as handle:
        return list(csv.DictReader(handle))


# ------------------------ recursion lemma tests ------------------------

def test_recursion_lemmas_on_default_grid(tmp_path):
    """verify-recursion: two-phase, unrolled and constant lemmas hold on every draw of the default grid"""
    out = tmp_path / "recursion.csv"
    assert run_config("verify-recursion", "recursion_acceptance.yaml", out, "--workers", "4") == EXIT_OK
    rows = read_rows(out)
    two_phase = [r for r in rows if r["lemma_tag"] == "two_phase"]
    assert len(two_phase) == 2 * 2 * 3 * 2 * 6 * 2
    for row in rows:
        if row["lemma_tag"] in ("two_phase", "unroll", "constant_log"):
            assert float(row["margin"]) >= -1e-9 * float(row["bound"])


def test_sublinear_lemma_without_decay(tmp_path):
    """verify-recursion: a = 0 grid over d, c, r0 and T under the sublinear stepsize"""
    out = tmp_path / "sublinear.csv"
    assert run_config("verify-recursion", "recursion_sublinear.yaml", out, "--workers", "4") == EXIT_OK
    rows = read_rows(out)
    assert {row["lemma_tag"] for row in rows} == {"sublinear"}
    assert len(rows) == 2 * 3 * 6 * 3 * 3 * 2
    per_point = {}
    for row in rows:
        key = (row["b"], row["c"], row["d"], row["T"], row["mode"])
        per_point.setdefault(key, set()).add(row["seed"])
    assert all(len(seeds) == 3 for seeds in per_point.values())


# ------------------------ engine tests ------------------------

def test_deterministic_gradient_descent(tmp_path):
    """run: noiseless quadratic, last-iterate distance and theorem checks"""
    assert run_config("run", "deterministic_gd.yaml", tmp_path / "gd.csv") == EXIT_OK


@pytest.mark.parametrize("T", [10, 100, 1000])
def test_gradient_descent_contracts_pathwise(T):
    """run_sgd: ||x_T - x*||^2 <= (1 - mu gamma)^T R^2 and every descent margin >= -1e-10"""
    oracle = make_noisy_quadratic([0.1, 0.4, 1.0])
    x0 = oracle.start_point(rng_stream(1, STREAM_START_POINT, 0), 1.0)
    gamma = 1.0 / (2.0 * oracle.L)
    cfg = RunConfig(
        horizon=T,
        schedule=user_constant_schedule(gamma, 2.0 * oracle.L, oracle.mu, T),
        record_trajectory=True,
        descent_check=True,
    )
    result = run_sgd(oracle, x0, cfg)
    dist_T = float(oracle.distance_sq(result.trajectory[T]))
    assert dist_T <= (1.0 - oracle.mu * gamma) ** T * (1.0 + 1e-12)
    assert float(np.min(result.descent_margins)) >= -1e-10


def test_stochastic_theorem(tmp_path):
    """run: noisy quadratic, 1000 replicates, mean composite under the theorem bound"""
    out = tmp_path / "theorem.csv"
    assert run_config("run", "stochastic_theorem.yaml", out, "--workers", "3") == EXIT_OK
    assert [int(row["T"]) for row in read_rows(out)] == [100, 1000, 10000]


def test_interpolation_decays_geometrically(tmp_path):
    """sweep: interpolating least squares reports sigma2 = 0 and decays from T to 2T"""
    out = tmp_path / "interpolation.csv"
    assert run_config("sweep", "interpolation.yaml", out) == EXIT_OK
    rows = read_rows(out)
    assert {row["sigma2"] for row in rows} == {"0.0"}
    composites = [float(row["composite"]) for row in rows]
    assert composites == sorted(composites, reverse=True)


def test_sublinear_rate_without_strong_convexity(tmp_path):
    """run: singular consistent least squares under the sublinear stepsize"""
    out = tmp_path / "mu0.csv"
    assert run_config("run", "mu0_sublinear.yaml", out) == EXIT_OK
    assert {row["mu"] for row in read_rows(out)} == {"0.0"}


# ------------------------ oracle tests ------------------------

def test_assumption_validators_on_standard_instances(tmp_path):
    """check-oracle: no flagged violation and no negative mu margin on the standard grid"""
    out = tmp_path / "oracle.csv"
    assert run_config("check-oracle", "oracle_check.yaml", out, "--workers", "4") == EXIT_OK
    rows = read_rows(out)
    assert len(rows) == 8 * 20
    assert min(float(row["mu_margin"]) for row in rows) >= -1e-10


# ------------------------ determinism tests ------------------------

def test_smallest_theorem_cell_is_byte_identical(tmp_path, write_config):
    """run: the T = 100 theorem cell replays byte for byte"""
    text = (CONFIGS_DIR / "stochastic_theorem.yaml").read_text()
    path = write_config(text.replace("horizons: [100, 1000, 10000]", "horizons: [100]"))
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    assert main(["run", "--config", str(path), "--out", str(first)]) == EXIT_OK
    assert main(["run", "--config", str(path), "--out", str(second), "--workers", "2"]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()

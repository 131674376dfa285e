"""
Shared fixtures for the sgd_bounds test suites
"""
import textwrap
from pathlib import Path

import numpy as np
import pytest

from sgd_bounds.oracles import make_finite_sum_least_squares, make_noisy_quadratic
from sgd_bounds.recursion_lab import RecursionParams
from sgd_bounds.rng import rng_stream

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture
def rng():
    """Fixture: a fixed Philox stream so every test replays the same draws"""
    return rng_stream(1234, 99)


@pytest.fixture
def geometric_params():
    """Fixture: a=1, b=1, c=0, d=2, the pure-decay recursion"""
    return RecursionParams(a=1.0, b=1.0, c=0.0, d=2.0)


@pytest.fixture
def noisy_params():
    """Fixture: a=1, b=1, c=1, d=2"""
    return RecursionParams(a=1.0, b=1.0, c=1.0, d=2.0)


@pytest.fixture
def unit_quadratic():
    """Fixture: f(x) = x^2 / 2 in one dimension, no noise"""
    return make_noisy_quadratic([1.0])


@pytest.fixture
def noisy_unit_quadratic():
    """Fixture: f(x) = x^2 / 2 with sigma2 = 1"""
    return make_noisy_quadratic([1.0], sigma2=1.0)


@pytest.fixture
def interpolating_least_squares():
    """Fixture: 50 cyclic basis rows in 10 dimensions with consistent targets"""
    from sgd_bounds.oracles import cyclic_basis_rows

    return make_finite_sum_least_squares(cyclic_basis_rows(50, 10), interpolating=True, master_seed=5)


@pytest.fixture
def write_config(tmp_path):
    """Fixture: write a dedented YAML campaign file and return its path"""

    def _write(text: str, name: str = "campaign.yaml") -> Path:
        path = tmp_path / name
        path.write_text(textwrap.dedent(text))
        return path

    return _write


@pytest.fixture(autouse=True)
def _isolated_environment(monkeypatch, tmp_path):
    """Fixture: no SGD_BOUNDS_* variables and no stray .env from the working directory"""
    for name in ("SGD_BOUNDS_WORKERS", "SGD_BOUNDS_OUTPUT_DIR", "SGD_BOUNDS_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


def header_of(path: Path) -> str:
    return Path(path).read_text().splitlines()[0]


def assert_close(actual, expected, rel=1e-12, abs_=0.0):
    assert np.allclose(actual, expected, rtol=rel, atol=abs_), f"{actual!r} != {expected!r}"

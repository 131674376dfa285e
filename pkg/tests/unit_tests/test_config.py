from pathlib import Path

import pytest

from sgd_bounds.campaigns import recursion_grid
from sgd_bounds.errors import ConfigurationError
from sgd_bounds.models.config import ExperimentConfig, load_config, load_config_text
from sgd_bounds.settings import Settings

CONFIGS_DIR = Path(__file__).resolve().parents[2] / "configs"

RUN_CAMPAIGN = """\
mode: run
master_seed: 7
replicates: 3
problems:
  - kind: quadratic
    spectrum: [0.5, 1.0]
    sigma2: 0.25
algorithm:
  schedules: [two_phase, sublinear]
  horizons: [10, 100]
"""


# ------------------------ campaign file tests ------------------------

def test_load_run_campaign():
    """load_config_text: a run campaign with defaults filled in"""
    config = load_config_text(RUN_CAMPAIGN)
    assert config.mode == "run"
    assert config.master_seed == 7
    assert config.problems[0].spectrum == [0.5, 1.0]
    assert config.problems[0].name == "quadratic"
    assert config.algorithm.horizons == [10, 100]
    assert config.workers is None
    assert config.recursion.draws == 10_000


def test_campaign_round_trips_through_yaml():
    """ExperimentConfig.to_yaml: dumping and reloading gives an equal model"""
    config = load_config_text(RUN_CAMPAIGN)
    assert load_config_text(config.to_yaml()) == config


def test_zero_replicates_reports_field_and_line():
    """load_config_text: replicates = 0 names the field and its line"""
    text = RUN_CAMPAIGN.replace("replicates: 3", "replicates: 0")
    with pytest.raises(ConfigurationError) as excinfo:
        load_config_text(text, source="bad.yaml")
    message = str(excinfo.value)
    assert "bad.yaml" in message
    assert "replicates" in message
    assert "(line 3)" in message


def test_nested_errors_point_at_the_item():
    """load_config_text: a bad problem entry is reported at its list position"""
    text = RUN_CAMPAIGN.replace("spectrum: [0.5, 1.0]", "spectrum: [0.5, -1.0]")
    with pytest.raises(ConfigurationError, match="problems.0") as excinfo:
        load_config_text(text)
    assert "(line 5)" in str(excinfo.value)


def test_unknown_keys_are_rejected():
    """load_config_text: misspelled keys are errors, not silently ignored"""
    with pytest.raises(ConfigurationError, match="replicate"):
        load_config_text(RUN_CAMPAIGN + "replicate: 4\n")


def test_mode_blocks_are_required():
    """load_config_text: run needs problems and an algorithm, bound needs a bound block"""
    with pytest.raises(ConfigurationError, match="problems"):
        load_config_text("mode: sweep\nalgorithm: {schedules: [two_phase], horizons: [10]}\n")
    with pytest.raises(ConfigurationError, match="bound"):
        load_config_text("mode: bound\n")


def test_user_constant_needs_gamma():
    """load_config_text: user_constant without gamma is a configuration error"""
    text = RUN_CAMPAIGN.replace("[two_phase, sublinear]", "[user_constant]")
    with pytest.raises(ConfigurationError, match="gamma"):
        load_config_text(text)


def test_invalid_yaml_and_non_mapping_documents():
    """load_config_text: syntax errors and non-mapping documents"""
    with pytest.raises(ConfigurationError, match="invalid YAML"):
        load_config_text("mode: [run\n")
    with pytest.raises(ConfigurationError, match="mapping"):
        load_config_text("- run\n")


def test_seed_range():
    """load_config_text: seeds are unsigned 64-bit integers"""
    top = load_config_text(RUN_CAMPAIGN.replace("master_seed: 7", f"master_seed: {2**64 - 1}"))
    assert top.master_seed == 2**64 - 1
    with pytest.raises(ConfigurationError, match="master_seed"):
        load_config_text(RUN_CAMPAIGN.replace("master_seed: 7", "master_seed: -1"))


RECURSION_CAMPAIGN = """\
mode: verify-recursion
master_seed: 11
recursion:
  a: [0.0]
  b: [1.0]
  c: [0.0, 1.0]
  T: [1, 10]
  d_factors: [1.0]
  d_offsets: [2.0]
  r0: [0.25, 1.0, 4.0]
  draws: 10
  lemmas: [sublinear]
"""


def test_recursion_r0_grid():
    """load_config_text + recursion_grid: every r0 of the list becomes its own cell"""
    config = load_config_text(RECURSION_CAMPAIGN)
    assert config.recursion.r0 == [0.25, 1.0, 4.0]
    grid = recursion_grid(config)
    assert len(grid.cells) == 2 * 2 * 3
    assert [cell.index for cell in grid.cells] == list(range(12))
    assert sorted({cell.r0 for cell in grid.cells}) == [0.25, 1.0, 4.0]
    assert [cell.r0 for cell in grid.cells[:3]] == [0.25, 1.0, 4.0]


def test_recursion_scalar_r0_is_a_one_point_grid():
    """load_config_text: r0 given as a number is read as a single-entry list"""
    config = load_config_text(RECURSION_CAMPAIGN.replace("r0: [0.25, 1.0, 4.0]", "r0: 4.0"))
    assert config.recursion.r0 == [4.0]
    assert {cell.r0 for cell in recursion_grid(config).cells} == {4.0}


@pytest.mark.parametrize("value", ["[1.0, -0.5]", "[]"])
def test_recursion_r0_must_be_non_empty_and_non_negative(value):
    """load_config_text: negative or empty r0 grids name the field and its line"""
    text = RECURSION_CAMPAIGN.replace("r0: [0.25, 1.0, 4.0]", f"r0: {value}")
    with pytest.raises(ConfigurationError, match="recursion.r0") as excinfo:
        load_config_text(text)
    assert "(line 10)" in str(excinfo.value)


def test_recursion_r0_grid_round_trips():
    """ExperimentConfig.to_yaml: the r0 list survives a dump and reload"""
    config = load_config_text(RECURSION_CAMPAIGN)
    assert load_config_text(config.to_yaml()).recursion.r0 == [0.25, 1.0, 4.0]


def test_load_config_missing_file(tmp_path):
    """load_config: unreadable files are configuration errors"""
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")


@pytest.mark.parametrize("path", sorted(CONFIGS_DIR.glob("*.yaml")), ids=lambda p: p.name)
def test_shipped_configs_are_valid(path):
    """load_config: every campaign file under configs/ validates"""
    assert isinstance(load_config(path), ExperimentConfig)


# ------------------------ settings tests ------------------------

def test_settings_defaults():
    """Settings.from_env: nothing set gives one worker and WARNING logs"""
    settings = Settings.from_env(dotenv=False)
    assert settings.workers == 1
    assert settings.output_dir is None
    assert settings.log_level == "WARNING"


def test_settings_from_environment(monkeypatch, tmp_path):
    """Settings.from_env: SGD_BOUNDS_* variables are picked up"""
    monkeypatch.setenv("SGD_BOUNDS_WORKERS", "4")
    monkeypatch.setenv("SGD_BOUNDS_OUTPUT_DIR", str(tmp_path))
    monkeypatch.setenv("SGD_BOUNDS_LOG_LEVEL", "debug")
    settings = Settings.from_env(dotenv=False)
    assert settings.workers == 4
    assert settings.output_dir == tmp_path
    assert settings.log_level == "DEBUG"


def test_settings_reject_bad_workers(monkeypatch):
    """Settings.from_env: invalid values name the variable"""
    monkeypatch.setenv("SGD_BOUNDS_WORKERS", "0")
    with pytest.raises(ConfigurationError, match="SGD_BOUNDS_WORKERS"):
        Settings.from_env(dotenv=False)


def test_settings_read_dotenv_file(tmp_path, monkeypatch):
    """Settings.from_env: a .env file in the working directory is loaded"""
    (tmp_path / ".env").write_text("SGD_BOUNDS_WORKERS=3\n")
    monkeypatch.chdir(tmp_path)
    assert Settings.from_env().workers == 3
    monkeypatch.delenv("SGD_BOUNDS_WORKERS", raising=False)

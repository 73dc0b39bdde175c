import os

import pytest

from surveyfda.errors import ConfigError
from surveyfda.schemas import Mode, PriorKind
from surveyfda.settings import load_run_config, load_settings, split_ini_list


def test_load_settings_default():
    """load_settings returns an object with default settings present."""

    settings = load_settings()

    assert settings.threads == 1
    assert settings.progress_interval == 5.0
    assert settings.max_failed_replicate_fraction == 0.1
    assert settings.log_config["root"] == {"level": "WARNING"}
    assert settings.log_config["loggers"]["surveyfda"] == {"level": "INFO"}


def test_load_settings_override(monkeypatch):
    """load_settings values can be overridden by environment variables.

    This test shows/proves that the pydantic BaseSettings environment variable
    parsing feature is generally working. It is not necessary to add similar
    tests for every value in settings.
    """

    monkeypatch.setenv("SURVEYFDA_THREADS", "4")

    settings = load_settings()

    # It should have used the value from environment.
    assert settings.threads == 4


def test_load_settings_ini_path(monkeypatch, tmp_path):
    """An ini file named by SURVEYFDA_INI_PATH takes precedence."""

    ini = tmp_path / "extra.ini"
    ini.write_text("[loglevels]\nsurveyfda = DEBUG\n")
    monkeypatch.setenv("SURVEYFDA_INI_PATH", str(ini))

    settings = load_settings()

    assert settings.log_config["loggers"]["surveyfda"] == {"level": "DEBUG"}


@pytest.mark.parametrize(
    "raw,expected",
    [
        (None, []),
        ("", []),
        ("age", ["age"]),
        ("\nyear1\n  year2 \n\nsurvived", ["year1", "year2", "survived"]),
    ],
)
def test_split_ini_list(raw, expected):
    assert split_ini_list(raw) == expected


def test_run_config_defaults():
    """Without a config file, defaults come from surveyfda.ini."""

    config = load_run_config(None, load_settings())

    assert config.mode == Mode.binomial
    assert config.threshold == 0.95
    assert config.standardize
    assert config.columns.id_column == "unit_id"
    assert config.sampler.iterations == 5000
    assert config.sampler.burn_in == 1000
    assert config.sampler.prior == PriorKind.horseshoe
    assert config.simulation.replicates == 20
    assert config.simulation.expected_n == 300
    assert config.threads == 1


def test_run_config_from_file(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[run]\n"
        "mode = multinomial\n"
        "curves_file = data/curves.csv\n"
        "scalars_file = /abs/scalars.csv\n"
        "categories =\n"
        "  year1\n"
        "  survived\n"
        "[columns]\n"
        "category_column = outcome\n"
        "covariates =\n"
        "  age\n"
        "  bmi\n"
        "[sampler]\n"
        "iterations = 300\n"
        "burn_in = 100\n"
        "prior = normal\n"
    )

    config = load_run_config(str(ini), load_settings())

    assert config.mode == Mode.multinomial
    assert config.categories == ["year1", "survived"]
    assert config.columns.covariates == ["age", "bmi"]
    assert config.sampler.iterations == 300
    assert config.sampler.prior == PriorKind.normal
    # Relative input paths are taken relative to the config file.
    assert config.curves_file == os.path.join(
        str(tmp_path), "data/curves.csv"
    )
    assert config.scalars_file == "/abs/scalars.csv"


def test_run_config_overrides(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[sampler]\nseed = 3\n[run]\nout_dir = from-file\n")

    config = load_run_config(
        str(ini),
        load_settings(),
        overrides={"seed": 2**64 - 1, "out_dir": None, "threads": 3},
    )

    assert config.sampler.seed == 2**64 - 1
    assert config.out_dir == "from-file"
    assert config.threads == 3


def test_run_config_threads_from_settings(monkeypatch):
    monkeypatch.setenv("SURVEYFDA_THREADS", "6")

    config = load_run_config(None, load_settings())

    assert config.threads == 6


def test_run_config_missing_file(tmp_path):
    with pytest.raises(ConfigError) as exc_info:
        load_run_config(str(tmp_path / "absent.ini"), load_settings())

    assert exc_info.value.exit_code == 1


def test_run_config_invalid_sampler(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[sampler]\niterations = 100\nburn_in = 100\n")

    with pytest.raises(ConfigError) as exc_info:
        load_run_config(str(ini), load_settings())

    assert "sampler" in str(exc_info.value)
    assert "burn_in (100) must be less than iterations" in str(
        exc_info.value
    )


@pytest.mark.parametrize(
    "text",
    [
        "[run]\nmode = multinomial\ncategories = only\n",
        "[run]\nmode = multinomial\ncategories =\n  a\n  b\n",
        "[run]\nthreshold = 1.5\n",
        "[run]\ncategories =\n  a\n  a\n",
        "[sampler]\nprior = laplace\n",
    ],
    ids=["one-category", "no-column", "threshold", "repeated", "prior"],
)
def test_run_config_rejects(tmp_path, text):
    ini = tmp_path / "run.ini"
    ini.write_text(text)

    with pytest.raises(ConfigError):
        load_run_config(str(ini), load_settings())

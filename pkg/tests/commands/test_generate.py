import configparser

import pandas as pd

from surveyfda.synthetic import CATEGORY_NAMES

from .conftest import listing


def test_generate_writes_population(generated):
    assert listing(generated) == [
        "curves.csv",
        "run.ini",
        "scalars.csv",
        "truth.csv",
    ]

    curves = pd.read_csv(generated / "curves.csv")
    scalars = pd.read_csv(generated / "scalars.csv")
    assert curves.shape == (60, 13)
    assert list(scalars.columns) == [
        "unit_id",
        "response",
        "weight",
        "category",
        "age",
    ]
    assert set(scalars["category"]) <= set(CATEGORY_NAMES)
    assert scalars["age"].between(50.0, 85.0).all()


def test_generated_run_config(generated):
    config = configparser.ConfigParser()
    config.read(generated / "run.ini")

    assert config["run"]["curves_file"] == "curves.csv"
    assert config["columns"]["category_column"] == "category"
    assert config["sampler"]["iterations"] == "40"


def test_generate_is_deterministic(invoke, tmp_path):
    for name in ("a", "b"):
        result = invoke(
            "generate", "--n", 10, "--grid-size", 5, "--out", tmp_path / name
        )
        assert result.exit_code == 0, result.output

    for name in ("curves.csv", "scalars.csv", "truth.csv"):
        first = (tmp_path / "a" / name).read_bytes()
        assert first == (tmp_path / "b" / name).read_bytes()


def test_generate_needs_out(invoke):
    result = invoke("generate", "--n", 10)

    assert result.exit_code == 1
    assert "--out" in result.output

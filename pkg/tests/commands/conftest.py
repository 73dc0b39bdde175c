import os

import pytest
from click.testing import CliRunner

from surveyfda.main import cli

QUICK_SAMPLER = "[sampler]\niterations = 40\nburn_in = 10\nseed = 17\n"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def invoke(runner):
    def do_invoke(*args):
        return runner.invoke(cli, [str(a) for a in args])

    return do_invoke


@pytest.fixture
def generated(invoke, tmp_path):
    """A small synthetic population with a run.ini set up for quick fits."""
    out = tmp_path / "population"
    result = invoke(
        "generate", "--n", 60, "--grid-size", 12, "--seed", 3, "--out", out
    )
    assert result.exit_code == 0, result.output

    with open(out / "run.ini", "a", encoding="utf-8") as f:
        f.write("\n" + QUICK_SAMPLER)
    return out


def set_mode(run_ini, mode):
    text = run_ini.read_text()
    run_ini.write_text(text.replace("mode = binomial", f"mode = {mode}"))


def listing(path):
    return sorted(os.listdir(path))

"""Write a synthetic population with known generating effects.

Produces curves.csv, scalars.csv, truth.csv (the generating functional
coefficient) and run.ini, a run configuration for these files that
'surveyfda fit --config' accepts as is.
"""

import configparser
import logging
import os

import click

from ..artifacts import FLOAT_FORMAT
from ..schemas import UINT64_MAX, ColumnContract
from ..synthetic import CATEGORY_NAMES, MINUTES_PER_DAY, generate_population
from .options import output_dir

LOG = logging.getLogger("surveyfda")

COLUMNS = ColumnContract(category_column="category", covariates=["age"])


def generated_run_config() -> configparser.ConfigParser:
    config = configparser.ConfigParser()
    config["run"] = {
        "mode": "binomial",
        "curves_file": "curves.csv",
        "scalars_file": "scalars.csv",
        "log1p": "true",
        "categories": "\n" + "\n".join(CATEGORY_NAMES),
    }
    config["columns"] = {
        "id_column": COLUMNS.id_column,
        "response_column": COLUMNS.response_column,
        "weight_column": COLUMNS.weight_column,
        "category_column": str(COLUMNS.category_column),
        "covariates": "\n" + "\n".join(COLUMNS.covariates),
    }
    return config


def run_generate(n: int, grid_size: int, seed: int, out_dir: str) -> str:
    population = generate_population(n, grid_size, seed=seed)
    out = output_dir(out_dir)
    population.dataset.to_files(
        os.path.join(out, "curves.csv"),
        os.path.join(out, "scalars.csv"),
        COLUMNS,
    )
    population.truth_frame().to_csv(
        os.path.join(out, "truth.csv"), index=False, float_format=FLOAT_FORMAT
    )
    with open(os.path.join(out, "run.ini"), "w", encoding="utf-8") as f:
        generated_run_config().write(f)
    return out


@click.command("generate", help=__doc__)
@click.option("--n", "n", type=click.IntRange(min=2), required=True)
@click.option(
    "--grid-size",
    type=click.IntRange(min=2),
    default=MINUTES_PER_DAY,
    show_default=True,
)
@click.option("--seed", type=click.IntRange(0, UINT64_MAX), default=0)
@click.option(
    "--out", "out_dir", type=click.Path(file_okay=False), required=True
)
def command(n, grid_size, seed, out_dir):
    click.echo(run_generate(n, grid_size, seed, out_dir))

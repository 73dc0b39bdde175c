"""Run the replicated informative-subsampling study.

Each replicate draws a Poisson PPS subsample from the population, fits
the functional and scalar-only models with and without survey weights,
and scores each fit's predictions for the whole population by binary
cross-entropy. Without input files, a synthetic population is generated.
"""

import logging
import os

import click
import numpy as np

from .. import __version__
from ..artifacts import FLOAT_FORMAT
from ..dataset import FunctionalDataset, ingest
from ..errors import SurveyFdaError
from ..evaluation import reports_frame, run_simulation_study, summarize_bce
from ..schemas import Mode, RunConfig, SimulationMetadata
from ..settings import Settings, load_run_config
from ..synthetic import generate_population
from .options import (
    config_option,
    get_settings,
    out_option,
    output_dir,
    seed_option,
    threads_option,
    write_json,
)

LOG = logging.getLogger("surveyfda")


def load_population(config: RunConfig) -> FunctionalDataset:
    if config.curves_file and config.scalars_file:
        try:
            return ingest(
                config.curves_file,
                config.scalars_file,
                config.model_copy(update={"mode": Mode.binomial}),
            )
        except SurveyFdaError as exc:
            raise exc.annotate("ingest")

    study = config.simulation
    LOG.info(
        "No population files configured; generating %d synthetic units",
        study.population_size,
        extra={"event": "simulation"},
    )
    population = generate_population(
        study.population_size, study.grid_size, seed=config.sampler.seed
    ).dataset
    if config.log1p:
        population.curves = np.log1p(population.curves)
    return population


def run_simulate(config: RunConfig, settings: Settings) -> str:
    population = load_population(config)
    reports = run_simulation_study(
        population,
        config,
        threads=config.threads,
        progress_interval=settings.progress_interval,
        max_failed_fraction=settings.max_failed_replicate_fraction,
    )

    out = output_dir(config.out_dir)
    reports_frame(reports).to_csv(
        os.path.join(out, "bce_reports.csv"),
        index=False,
        float_format=FLOAT_FORMAT,
    )
    summarize_bce(reports).to_csv(
        os.path.join(out, "bce_summary.csv"),
        index=False,
        float_format=FLOAT_FORMAT,
    )

    done = {r.replicate for r in reports}
    metadata = SimulationMetadata(
        code_version=__version__,
        seed=config.sampler.seed,
        config=config.model_dump(mode="json"),
        population_size=population.n,
        replicates=config.simulation.replicates,
        failed_replicates=[
            r for r in range(config.simulation.replicates) if r not in done
        ],
    )
    write_json(
        metadata.model_dump(mode="json"), os.path.join(out, "simulation.json")
    )
    return out


@click.command("simulate", help=__doc__)
@config_option
@seed_option
@out_option
@threads_option
@click.pass_context
def command(ctx, config_path, seed, out_dir, threads):
    settings = get_settings(ctx)
    config = load_run_config(
        config_path,
        settings,
        overrides={"seed": seed, "out_dir": out_dir, "threads": threads},
    )
    click.echo(run_simulate(config, settings))

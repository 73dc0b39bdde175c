"""Fit the model to a dataset and write draws, basis and summary tables."""

import logging
import os
from time import monotonic

import click
import numpy as np
import pandas as pd

from .. import __version__
from ..artifacts import (
    BASIS_FILE,
    DRAWS_FILE,
    FLOAT_FORMAT,
    RUN_FILE,
    slice_draws_file,
    write_basis,
    write_draws,
    write_metadata,
)
from ..basis import BasisExpansion, fit_basis, reconstruct_eta
from ..dataset import FunctionalDataset, ingest
from ..diagnostics import summary_table
from ..errors import SurveyFdaError
from ..evaluation import pointwise_credible_band
from ..models import binomial, multinomial
from ..schemas import ArtifactMetadata, Mode, RunConfig
from ..settings import Settings, load_run_config
from ..survey import scale_weights
from .options import (
    config_option,
    get_settings,
    out_option,
    output_dir,
    seed_option,
    threads_option,
)

LOG = logging.getLogger("surveyfda")

BAND_LEVEL = 0.9


def _stage(name: str, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except SurveyFdaError as exc:
        raise exc.annotate(name)


def _fit_draws(
    dataset: FunctionalDataset,
    expansion: BasisExpansion,
    X: np.ndarray,
    beta_names: list[str],
    config: RunConfig,
    settings: Settings,
) -> list[binomial.PosteriorDraws]:
    w_tilde = scale_weights(dataset.raw_weights).scaled_weights
    if config.mode == Mode.binomial:
        Z, trials = dataset.responses()
        data = binomial.BinomialModelData(
            Z=Z, trials=trials, X=X, Xi=expansion.scores, w_tilde=w_tilde
        )
        return [
            binomial.fit(
                data,
                config.sampler,
                threads=config.threads,
                progress_interval=settings.progress_interval,
                beta_names=beta_names,
            )
        ]

    data = multinomial.CategoricalData.from_labels(
        dataset.labels,
        len(config.categories),
        X=X,
        Xi=expansion.scores,
        w_tilde=w_tilde,
        category_names=config.categories,
    )
    return multinomial.fit_multinomial(
        data,
        config.sampler,
        threads=config.threads,
        progress_interval=settings.progress_interval,
        beta_names=beta_names,
    )


def _with_slice(frames: list[pd.DataFrame], slices: bool) -> pd.DataFrame:
    if not slices:
        return frames[0]
    for c, frame in enumerate(frames, start=1):
        frame.insert(0, "slice", c)
    return pd.concat(frames, ignore_index=True)


def category_probs_frame(
    unit_ids: list[str], probs: np.ndarray, category_names: list[str]
) -> pd.DataFrame:
    """Posterior mean category probabilities, one row per unit."""
    frame = pd.DataFrame(
        probs.mean(axis=0), columns=[f"p[{c}]" for c in category_names]
    )
    frame.insert(0, "unit_id", unit_ids)
    return frame


def run_fit(config: RunConfig, settings: Settings) -> str:
    """Run the whole fit pipeline and return the output directory."""
    start = monotonic()
    dataset = _stage(
        "ingest", ingest, config.curves_file, config.scalars_file, config
    )
    expansion = _stage(
        "basis", fit_basis, dataset.curves, dataset.grid, config.threshold
    )
    scaling = dataset.covariate_scaling() if config.standardize else {}
    X, beta_names = _stage(
        "design", dataset.design_matrix, config.intercept, scaling or None
    )
    slice_draws = _stage(
        "sampler",
        _fit_draws,
        dataset,
        expansion,
        X,
        beta_names,
        config,
        settings,
    )

    out = output_dir(config.out_dir)
    multinomial_run = config.mode == Mode.multinomial
    metadata = ArtifactMetadata(
        code_version=__version__,
        seed=config.sampler.seed,
        config=config.model_dump(mode="json"),
        basis=expansion.metadata(),
        covariate_names=beta_names,
        covariate_scaling=scaling,
        category_names=list(config.categories) if multinomial_run else [],
    )
    write_metadata(metadata, os.path.join(out, RUN_FILE))
    write_basis(expansion, os.path.join(out, BASIS_FILE))

    summaries = []
    bands = []
    for c, draws in enumerate(slice_draws, start=1):
        name = slice_draws_file(c) if multinomial_run else DRAWS_FILE
        write_draws(
            draws,
            os.path.join(out, name),
            metadata.model_copy(
                update={"slice_index": c if multinomial_run else None}
            ),
        )
        table = summary_table(draws)
        beta_rows = table["parameter"].str.startswith("beta[")
        summaries.append(table[beta_rows].reset_index(drop=True).copy())
        eta = reconstruct_eta(draws.b_draws, expansion)
        bands.append(
            pointwise_credible_band(
                eta, BAND_LEVEL, grid=expansion.grid.times
            ).to_frame()
        )

    tables = ((summaries, "beta_summary.csv"), (bands, "eta_band.csv"))
    for frames, name in tables:
        _with_slice(frames, multinomial_run).to_csv(
            os.path.join(out, name), index=False, float_format=FLOAT_FORMAT
        )

    if multinomial_run:
        probs = multinomial.predict_category_probabilities(
            slice_draws, X, expansion.scores
        )
        category_probs_frame(
            dataset.unit_ids, probs, list(config.categories)
        ).to_csv(
            os.path.join(out, "category_probs.csv"),
            index=False,
            float_format=FLOAT_FORMAT,
        )

    LOG.info(
        "Fit written to %s",
        out,
        extra={
            "event": "fit",
            "success": True,
            "duration_ms": int((monotonic() - start) * 1000),
        },
    )
    return out


@click.command("fit", help=__doc__)
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
    out = run_fit(config, settings)
    click.echo(out)

"""Predict outcome probabilities for new units from a fitted model.

New curves must lie on the grid the model was fitted on. Covariates are
transformed exactly as they were at fit time.
"""

import logging
import os

import click
import numpy as np
import pandas as pd

from ..artifacts import FLOAT_FORMAT, FitArtifact
from ..basis import project_curves
from ..dataset import FunctionalDataset, ingest
from ..errors import DataValidationError, SurveyFdaError
from ..models import binomial, multinomial
from ..schemas import RunConfig
from ..settings import Settings, load_run_config
from .options import (
    config_option,
    draws_option,
    get_settings,
    out_option,
    output_dir,
)

LOG = logging.getLogger("surveyfda")

INTERVAL_LEVEL = 0.9
GRID_TOLERANCE = 1e-9


def _check_grid(dataset: FunctionalDataset, artifact: FitArtifact):
    fitted = artifact.basis.grid.times
    new = dataset.grid.times
    if new.shape != fitted.shape or np.any(
        np.abs(new - fitted) > GRID_TOLERANCE
    ):
        raise DataValidationError(
            f"new curves have a {new.shape[0]}-point grid that does not "
            f"match the {fitted.shape[0]}-point grid of the fitted basis"
        )


def _interval_columns(
    probabilities: np.ndarray, prefix: str
) -> dict[str, np.ndarray]:
    alpha = (1.0 - INTERVAL_LEVEL) / 2.0
    lower, upper = np.quantile(probabilities, [alpha, 1.0 - alpha], axis=0)
    return {
        f"{prefix}mean": probabilities.mean(axis=0),
        f"{prefix}lower": lower,
        f"{prefix}upper": upper,
    }


def predict_frame(
    artifact: FitArtifact, dataset: FunctionalDataset
) -> pd.DataFrame:
    """Per-unit predictions: posterior mean and 90% interval of the
    success probability, or of every category probability together with
    the cumulative probabilities for multinomial fits.
    """
    fit_config = RunConfig.model_validate(artifact.metadata.config)
    _check_grid(dataset, artifact)
    Xi = project_curves(dataset.curves, artifact.basis)
    X, names = dataset.design_matrix(
        fit_config.intercept, artifact.metadata.covariate_scaling or None
    )
    if names != artifact.metadata.covariate_names:
        raise DataValidationError(
            f"new units have covariates {names}, the model was fitted "
            f"with {artifact.metadata.covariate_names}"
        )

    columns: dict[str, object] = {"unit_id": dataset.unit_ids}
    if not artifact.multinomial:
        prediction = binomial.predict_probabilities(artifact.draws[0], X, Xi)
        columns.update(_interval_columns(prediction.probabilities, ""))
        return pd.DataFrame(columns)

    probs = multinomial.predict_category_probabilities(artifact.draws, X, Xi)
    cumulative = np.cumsum(probs, axis=-1)
    for c, name in enumerate(artifact.metadata.category_names):
        columns.update(_interval_columns(probs[..., c], f"p[{name}]."))
    for c, name in enumerate(artifact.metadata.category_names[:-1]):
        columns.update(
            _interval_columns(cumulative[..., c], f"cumulative[{name}].")
        )
    return pd.DataFrame(columns)


def run_predict(
    draws_dir: str,
    curves_file: str,
    scalars_file: str,
    config: RunConfig,
    out_dir: str,
) -> str:
    try:
        artifact = FitArtifact.load(draws_dir)
    except SurveyFdaError as exc:
        raise exc.annotate("load")

    # Transforms and columns come from the fit; the run config may only
    # rename the identifying column or change the delimiter.
    fit_config = RunConfig.model_validate(artifact.metadata.config)
    columns = fit_config.columns.model_copy(
        update={
            "id_column": config.columns.id_column,
            "delimiter": config.columns.delimiter,
        }
    )
    try:
        dataset = ingest(
            curves_file,
            scalars_file,
            fit_config.model_copy(update={"columns": columns}),
            outcomes=False,
        )
    except SurveyFdaError as exc:
        raise exc.annotate("ingest")

    frame = predict_frame(artifact, dataset)
    out = output_dir(out_dir)
    path = os.path.join(out, "predictions.csv")
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    LOG.info(
        "Wrote predictions for %d units to %s",
        len(frame),
        path,
        extra={"event": "predict", "success": True},
    )
    return path


@click.command("predict", help=__doc__)
@config_option
@draws_option
@click.option(
    "--curves",
    "curves_file",
    type=click.Path(dir_okay=False),
    required=True,
    help="Curves of the units to predict for.",
)
@click.option(
    "--scalars",
    "scalars_file",
    type=click.Path(dir_okay=False),
    required=True,
    help="Scalar covariates of the units to predict for.",
)
@out_option
@click.pass_context
def command(ctx, config_path, draws_dir, curves_file, scalars_file, out_dir):
    settings: Settings = get_settings(ctx)
    config = load_run_config(config_path, settings)
    click.echo(
        run_predict(
            draws_dir,
            curves_file,
            scalars_file,
            config,
            out_dir or config.out_dir,
        )
    )

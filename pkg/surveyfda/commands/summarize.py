"""Convergence diagnostics and trace data for a fit.

Writes diagnostics.csv (mean, sd, quantiles, bulk ESS and split R-hat
per parameter) and trace.csv (every draw in long form).
"""

import logging
import os

import click
import pandas as pd

from ..artifacts import FLOAT_FORMAT, FitArtifact
from ..diagnostics import summary_table, trace_table
from ..errors import SurveyFdaError
from .options import draws_option, output_dir

LOG = logging.getLogger("surveyfda")


def _tables(artifact: FitArtifact, func) -> pd.DataFrame:
    frames = [func(draws) for draws in artifact.draws]
    if not artifact.multinomial:
        return frames[0]
    for c, frame in enumerate(frames, start=1):
        frame.insert(0, "slice", c)
    return pd.concat(frames, ignore_index=True)


def run_summarize(draws_dir: str, out_dir: str | None = None) -> str:
    try:
        artifact = FitArtifact.load(draws_dir)
    except SurveyFdaError as exc:
        raise exc.annotate("load")

    out = output_dir(out_dir or draws_dir)
    diagnostics = _tables(artifact, summary_table)
    diagnostics.to_csv(
        os.path.join(out, "diagnostics.csv"),
        index=False,
        float_format=FLOAT_FORMAT,
    )
    _tables(artifact, trace_table).to_csv(
        os.path.join(out, "trace.csv"), index=False, float_format=FLOAT_FORMAT
    )

    worst = diagnostics["r_hat"].max()
    LOG.info(
        "Summarized %d parameters; largest split R-hat %.4f",
        len(diagnostics),
        worst,
        extra={"event": "summarize", "success": True},
    )
    return out


@click.command("summarize", help=__doc__)
@draws_option
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False),
    default=None,
    help="Output directory; defaults to the draws directory.",
)
def command(draws_dir, out_dir):
    click.echo(run_summarize(draws_dir, out_dir))

"""surveyfda fits weighted Bayesian scalar-on-function regressions to
survey data collected under informative sampling.

Commands are grouped as follows:

- fit: fit a Binomial or stick-breaking Multinomial model and write
  draws, the functional basis and summary tables.
- predict: posterior predictive probabilities for new units.
- simulate: the replicated informative-subsampling study.
- summarize: convergence diagnostics and trace data for a fit.
- generate: write a synthetic population to experiment with.

Exit codes: 0 on success, 1 on invalid input or configuration,
2 on numerical failure.
"""

import logging
from uuid import uuid4

import click

from . import __version__
from .commands import fit, generate, predict, simulate, summarize
from .errors import DataValidationError, SurveyFdaError
from .logging import loggers_init, run_id
from .settings import load_settings

LOG = logging.getLogger("surveyfda")


class SurveyFdaGroup(click.Group):
    """Maps every failure to the exit code it stands for."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except SurveyFdaError as exc:
            LOG.error(
                "%s failed: %s",
                ctx.invoked_subcommand,
                exc,
                extra={"event": "cli", "success": False},
            )
            click.echo(f"Error: {exc}", err=True)
            ctx.exit(exc.exit_code)
        except click.UsageError as exc:
            # Usage errors are input errors, not numerical ones.
            exc.show()
            ctx.exit(DataValidationError.exit_code)


@click.group(cls=SurveyFdaGroup, help=__doc__)
@click.version_option(__version__, prog_name="surveyfda")
@click.pass_context
def cli(ctx: click.Context):
    settings = load_settings()
    loggers_init(settings)
    run_id.set(uuid4().hex)
    ctx.obj = {"settings": settings}


cli.add_command(fit.command)
cli.add_command(predict.command)
cli.add_command(simulate.command)
cli.add_command(summarize.command)
cli.add_command(generate.command)


def entry_point():
    cli()  # pylint: disable=no-value-for-parameter

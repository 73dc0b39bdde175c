"""Options and helpers shared by several commands."""

import json
import os

import click

from ..errors import DataValidationError
from ..schemas import UINT64_MAX

config_option = click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False),
    help="Run configuration file (.ini).",
)

seed_option = click.option(
    "--seed",
    type=click.IntRange(0, UINT64_MAX),
    default=None,
    help="Master seed; overrides the config file.",
)

out_option = click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False),
    default=None,
    help="Output directory; overrides the config file.",
)

threads_option = click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=None,
    help="Worker threads; overrides the config file.",
)

draws_option = click.option(
    "--draws",
    "draws_dir",
    type=click.Path(file_okay=False),
    required=True,
    help="Directory written by 'surveyfda fit'.",
)


def get_settings(ctx: click.Context):
    return ctx.find_root().obj["settings"]


def output_dir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise DataValidationError(
            f"cannot create output directory {path}: {exc}"
        ) from exc
    return path


def write_json(document: dict, path: str):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")

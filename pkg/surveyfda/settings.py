import configparser
import os
from typing import Any

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError
from .schemas import RunConfig

# Keys holding lists, written one value per continuation line.
LIST_KEYS = {"categories", "covariates"}


def split_ini_list(raw: str | None) -> list[str]:
    # Given a string value from an .ini file, splits it into multiple
    # strings over line boundaries, using the typical form supported
    # in .ini files.
    # e.g.
    #
    #    [run]
    #    categories=
    #      year1
    #      survived
    #
    # => returns ["year1", "survived"]

    if not raw:
        return []

    return [elem.strip() for elem in raw.split("\n") if elem.strip()]


class Settings(BaseSettings):
    # Process-level settings.
    #
    # Every setting can be overridden by an environment variable of the
    # same name, prefixed with "SURVEYFDA_".

    log_config: dict[str, Any] = {
        "version": 1,
        "incremental": True,
        "disable_existing_loggers": False,
    }
    """Logging configuration in dictConfig schema."""

    ini_path: str | None = None
    """Path to a surveyfda.ini file with additional settings."""

    threads: int = 1
    """Default number of worker threads for chains, slices and replicates."""

    progress_interval: float = 5.0
    """Minimum time in seconds between progress log messages."""

    max_failed_replicate_fraction: float = 0.1
    """A simulation study fails if more than this fraction of replicates
    could not be fitted.
    """

    model_config = SettingsConfigDict(env_prefix="surveyfda_")


def config_filenames(settings: Settings) -> list[str]:
    filenames = [
        os.path.join(os.path.dirname(__file__), "../surveyfda.ini"),
        "/etc/surveyfda/surveyfda.ini",
    ]

    # Putting the configured path last gives it the highest precedence,
    # as each file read may override settings from the prior.
    if settings.ini_path:
        filenames.append(settings.ini_path)
    return filenames


def load_settings() -> Settings:
    """Return the active process settings.

    Settings are loaded from environment variables, then log levels are
    taken from the ``[loglevels]`` section of any config files found.
    """

    settings = Settings()
    config = configparser.ConfigParser()
    config.read(config_filenames(settings))

    for logger in config["loglevels"] if "loglevels" in config else []:
        settings.log_config.setdefault("loggers", {})

        log_config = settings.log_config
        dest = log_config if logger == "root" else log_config["loggers"]

        dest.update({logger: {"level": config.get("loglevels", logger)}})

    return settings


def _section_values(
    config: configparser.ConfigParser, section: str
) -> dict[str, Any]:
    if section not in config:
        return {}
    out: dict[str, Any] = {}
    for key, raw in config.items(section):
        out[key] = split_ini_list(raw) if key in LIST_KEYS else raw
    return out


def load_run_config(
    path: str | None,
    settings: Settings | None = None,
    overrides: dict[str, Any] | None = None,
) -> RunConfig:
    """Build a validated RunConfig from the default ini files plus ``path``.

    ``overrides`` holds command-line values. Keys ``seed`` and
    ``out_dir``/``threads`` are applied after the files are read.
    """

    settings = settings or load_settings()
    config = configparser.ConfigParser()
    filenames = config_filenames(settings)
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        filenames.append(path)
    config.read(filenames)

    raw = _section_values(config, "run")
    raw.setdefault("threads", settings.threads)
    raw["columns"] = _section_values(config, "columns")
    raw["sampler"] = _section_values(config, "sampler")
    raw["simulation"] = _section_values(config, "simulation")

    # Input paths in a run config are relative to that file.
    if path:
        base = os.path.dirname(os.path.abspath(path))
        for key in ("curves_file", "scalars_file"):
            if raw.get(key) and not os.path.isabs(raw[key]):
                raw[key] = os.path.join(base, raw[key])

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "seed":
            raw["sampler"]["seed"] = value
        else:
            raw[key] = value

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        msgs = [
            "%s: %s" % (".".join(str(p) for p in e["loc"]), e["msg"])
            for e in exc.errors()
        ]
        raise ConfigError("invalid run config: " + "; ".join(msgs)) from exc

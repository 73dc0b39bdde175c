"""Synthetic populations shaped like accelerometry survey data.

Each unit has one day of minute-level activity counts, an age, a survey
weight, a binary five-year mortality flag and a six-level year-of-death
label. Outcomes follow a logistic model whose functional effect ``eta``
is known, so fits can be checked against the truth.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.special import expit

from .dataset import FunctionalDataset
from .distributions import RngStream
from .errors import DataValidationError

LOG = logging.getLogger("surveyfda")

MINUTES_PER_DAY = 1440
CATEGORY_NAMES = ["year1", "year2", "year3", "year4", "year5", "survived"]

AGE_RANGE = (50.0, 85.0)
AGE_CENTER = 67.0
AGE_SCALE = 10.0

# Generating coefficients: intercept, age per decade.
TRUE_BETA = (-1.8, 0.9)
ETA_AMPLITUDE = -4.0

# Raw weights lie within a factor of about four of each other.
WEIGHT_BASE = 1.6
WEIGHT_AGE_SLOPE = 0.4
WEIGHT_JITTER = 0.3


def _daytime_bump(u: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * ((u - 0.55) / 0.18) ** 2)


def true_eta(u: np.ndarray) -> np.ndarray:
    """Generating functional coefficient on the log(1+x) activity scale:
    more daytime activity lowers mortality.
    """
    return ETA_AMPLITUDE * _daytime_bump(u)


@dataclass
class SyntheticPopulation:
    dataset: FunctionalDataset
    eta: np.ndarray
    beta: tuple[float, float]
    linear_predictor: np.ndarray

    def truth_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"time": self.dataset.times, "eta": self.eta})


def generate_population(
    n: int, grid_size: int = MINUTES_PER_DAY, seed: int = 0
) -> SyntheticPopulation:
    if n < 2:
        raise DataValidationError(f"need at least 2 units, got {n}")
    if grid_size < 2:
        raise DataValidationError(f"need at least 2 grid points: {grid_size}")

    gen = RngStream(seed, 0).generator
    times = np.arange(grid_size) * (MINUTES_PER_DAY / grid_size)
    u = times / MINUTES_PER_DAY

    age = gen.uniform(*AGE_RANGE, size=n)
    age_std = (age - AGE_CENTER) / AGE_SCALE
    level = -0.3 * age_std + 0.9 * gen.standard_normal(n)
    shift = 0.05 * gen.standard_normal(n)
    evening = 0.4 * gen.standard_normal(n)

    log_scale = (
        1.0
        + (3.0 + 0.8 * level[:, None]) * _daytime_bump(u - shift[:, None])
        + evening[:, None] * np.cos(2 * np.pi * u)
        + 0.05 * gen.standard_normal((n, grid_size))
    )
    log_scale = np.maximum(log_scale, 0.0)
    counts = np.expm1(log_scale)

    eta = true_eta(u)
    step = 1.0 / (grid_size - 1)
    centered = log_scale - log_scale.mean(axis=0)
    psi = TRUE_BETA[0] + TRUE_BETA[1] * age_std + step * centered @ eta
    died = (gen.random(n) < expit(psi)).astype(float)

    # Earlier death years for riskier units.
    year = 1 + gen.binomial(4, expit(-psi))
    labels = np.where(died == 1, year, len(CATEGORY_NAMES))

    # Older respondents are under-represented, hence weigh more.
    raw_weights = 1000.0 * (
        WEIGHT_BASE
        + WEIGHT_AGE_SLOPE * age_std
        + WEIGHT_JITTER * gen.uniform(-1.0, 1.0, size=n)
    )

    dataset = FunctionalDataset(
        unit_ids=[f"u{i + 1:05d}" for i in range(n)],
        curves=counts,
        times=times,
        raw_weights=raw_weights,
        covariates=pd.DataFrame({"age": age}),
        Z=died,
        trials=np.ones(n),
        labels=labels,
        category_names=list(CATEGORY_NAMES),
    )
    LOG.info(
        "Generated %d synthetic units (%.1f%% deaths) on %d grid points",
        n,
        100.0 * died.mean(),
        grid_size,
        extra={"event": "generate"},
    )
    return SyntheticPopulation(
        dataset=dataset, eta=eta, beta=TRUE_BETA, linear_predictor=psi
    )

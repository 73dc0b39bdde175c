"""Scoring, posterior bands and the replicated informative-subsampling
study comparing functional and scalar models, weighted and unweighted.
"""

import logging
from dataclasses import dataclass
from time import monotonic

import numpy as np
import pandas as pd

from .basis import fit_basis, project_curves
from .dataset import FunctionalDataset
from .distributions import RngStream
from .errors import (
    DataValidationError,
    SimulationFailedError,
    SurveyFdaError,
)
from .models import binomial
from .schemas import BceReport, ModelTag, RunConfig
from .survey import (
    PoissonPpsDesign,
    make_size_variable,
    poisson_pps_sample,
    scale_weights,
)
from .worker.pool import map_in_threads
from .worker.progress import ProgressLogger

LOG = logging.getLogger("surveyfda")

PROBABILITY_CLAMP = 1e-12

# Fewer draws than this give unreliable tail quantiles.
MIN_BAND_DRAWS = 100

# Master stream of the simulation study; replicate r uses spawn(r).
SIMULATION_STREAM = 1 << 32

MODEL_TAGS = (ModelTag.fm_w, ModelTag.sm_w, ModelTag.fm_uw, ModelTag.sm_uw)


def binary_cross_entropy(Z, p_hat) -> float:
    """Mean negative Bernoulli log-likelihood of ``Z`` under ``p_hat``,
    with ``p_hat`` clamped to ``[1e-12, 1 - 1e-12]``.
    """
    Z = np.asarray(Z, dtype=float)
    p_hat = np.asarray(p_hat, dtype=float)
    if Z.shape != p_hat.shape or Z.ndim != 1:
        raise DataValidationError(
            f"{Z.shape} responses but {p_hat.shape} probabilities"
        )
    if Z.shape[0] == 0:
        raise DataValidationError("cannot score an empty set of units")
    p = np.clip(p_hat, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
    loss = Z * np.log(p) + (1.0 - Z) * np.log1p(-p)
    return float(-loss.mean())


@dataclass
class CredibleBand:
    grid: np.ndarray
    lower: np.ndarray
    mean: np.ndarray
    upper: np.ndarray
    level: float = 0.9

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "time": self.grid,
                "lower": self.lower,
                "mean": self.mean,
                "upper": self.upper,
            }
        )


def pointwise_credible_band(
    eta_draws: np.ndarray, level: float = 0.9, grid=None
) -> CredibleBand:
    """Equal-tailed pointwise interval and mean of each column of draws."""
    eta_draws = np.atleast_2d(np.asarray(eta_draws, dtype=float))
    if not 0.0 < level < 1.0:
        raise DataValidationError(f"band level must be in (0, 1): {level}")
    M, T = eta_draws.shape
    if M < MIN_BAND_DRAWS:
        LOG.warning(
            "Credible band from only %d draws; tail quantiles are "
            "unreliable below %d",
            M,
            MIN_BAND_DRAWS,
            extra={"event": "band"},
        )
    grid = np.arange(T, dtype=float) if grid is None else np.asarray(grid)
    alpha = (1.0 - level) / 2.0
    lower, upper = np.quantile(eta_draws, [alpha, 1.0 - alpha], axis=0)
    mean = eta_draws.mean(axis=0)
    return CredibleBand(
        grid=grid, lower=lower, mean=mean, upper=upper, level=level
    )


def _replicate(
    population: FunctionalDataset,
    config: RunConfig,
    replicate: int,
    stream: RngStream,
) -> list[BceReport]:
    Z, trials = population.responses()
    study = config.simulation

    if study.informative:
        sizes = make_size_variable(population.raw_weights, (Z > 0) * 1)
    else:
        sizes = np.ones(population.n)
    design = PoissonPpsDesign.from_sizes(sizes, study.expected_n)
    sample = poisson_pps_sample(design, stream.spawn(0))

    subsample = population.subset(sample.indices)
    weighted = scale_weights(sample.weights).scaled_weights
    unweighted = np.ones(len(sample))

    scaling = population.covariate_scaling() if config.standardize else None
    X_pop, names = population.design_matrix(config.intercept, scaling)
    X_sub = X_pop[sample.indices]

    # One basis per subsample, shared by both functional fits. Weighted
    # and unweighted fits of one model also share a stream, so they agree
    # draw for draw when the subsample weights are equal.
    basis = fit_basis(subsample.curves, population.grid, config.threshold)
    Xi_pop = project_curves(population.curves, basis)
    no_curves = np.zeros((len(sample), 0))

    reports = []
    for tag in MODEL_TAGS:
        data = binomial.BinomialModelData(
            Z=Z[sample.indices],
            trials=trials[sample.indices],
            X=X_sub,
            Xi=basis.scores if tag.functional else no_curves,
            w_tilde=weighted if tag.weighted else unweighted,
        )
        try:
            draws = binomial.fit(
                data,
                config.sampler,
                rng=stream.spawn(1 if tag.functional else 2),
                progress_interval=float("inf"),
                beta_names=names,
            )
        except SurveyFdaError as exc:
            raise exc.annotate(tag.value)
        Xi_new = Xi_pop if tag.functional else np.zeros((population.n, 0))
        prediction = binomial.predict_probabilities(draws, X_pop, Xi_new)
        bce = binary_cross_entropy(Z / trials, prediction.mean)
        LOG.debug(
            "Replicate %d %s: BCE %.6f",
            replicate,
            tag.value,
            bce,
            extra={
                "event": "simulation",
                "replicate": replicate,
                "model_tag": tag.value,
            },
        )
        reports.append(
            BceReport(
                model_tag=tag,
                replicate=replicate,
                bce=bce,
                sample_size=len(sample),
                K=basis.K if tag.functional else 0,
            )
        )
    return reports


def run_simulation_study(
    population: FunctionalDataset,
    config: RunConfig,
    threads: int = 1,
    progress_interval: float = 5.0,
    max_failed_fraction: float = 0.1,
) -> list[BceReport]:
    """Repeat subsample-fit-predict for ``config.simulation.replicates``
    replicates, four model variants each.

    Replicate r draws everything from ``RngStream(seed, SIMULATION_STREAM)
    .spawn(r)``, so results do not depend on ``threads``. A replicate whose
    fits fail is logged and skipped; the study fails if more than
    ``max_failed_fraction`` of replicates were skipped.
    """
    population.responses()
    if np.any(population.trials != 1) or np.any(population.Z > 1):
        raise DataValidationError(
            "the simulation study scores binary responses only"
        )
    replicates = config.simulation.replicates
    master = RngStream(config.sampler.seed, SIMULATION_STREAM)
    progress = ProgressLogger(
        message="Simulation replicates",
        items_total=replicates,
        interval=progress_interval,
    )
    start = monotonic()

    def run_one(replicate: int) -> list[BceReport] | None:
        try:
            reports = _replicate(
                population, config, replicate, master.spawn(replicate)
            )
        except SurveyFdaError as exc:
            LOG.warning(
                "Replicate %d failed: %s",
                replicate,
                exc,
                extra={
                    "event": "simulation",
                    "replicate": replicate,
                    "success": False,
                },
            )
            reports = None
        progress.update(1)
        return reports

    results = map_in_threads(
        run_one, range(replicates), threads=threads, name="surveyfda-rep"
    )

    failed = [r for r, reports in enumerate(results) if reports is None]
    if len(failed) > max_failed_fraction * replicates:
        raise SimulationFailedError(
            f"{len(failed)} of {replicates} replicates failed "
            f"(replicates {failed[:10]})"
        )

    LOG.info(
        "Simulation study finished: %d replicates, %d failed",
        replicates,
        len(failed),
        extra={
            "event": "simulation",
            "success": True,
            "duration_ms": int((monotonic() - start) * 1000),
        },
    )
    return [report for reports in results if reports for report in reports]


def reports_frame(reports: list[BceReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [r.model_dump(mode="json") for r in reports],
        columns=["model_tag", "replicate", "bce", "sample_size", "K"],
    )


def summarize_bce(reports: list[BceReport]) -> pd.DataFrame:
    """Per model tag: replicate count, mean, sd and standard error of BCE."""
    rows = []
    for tag in MODEL_TAGS:
        values = np.array([r.bce for r in reports if r.model_tag == tag])
        if values.size == 0:
            continue
        sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
        rows.append(
            {
                "model_tag": tag.value,
                "replicates": int(values.size),
                "mean": float(values.mean()),
                "sd": sd,
                "se": sd / np.sqrt(values.size),
            }
        )
    return pd.DataFrame(
        rows, columns=["model_tag", "replicates", "mean", "sd", "se"]
    )

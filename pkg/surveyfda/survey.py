"""Survey-design arithmetic: pseudo-posterior weight scaling and the
informative Poisson probability-proportional-to-size subsampling used by
the simulation study.
"""

import logging
from dataclasses import dataclass

import backoff
import numpy as np

from .distributions import RngStream
from .errors import (
    DataValidationError,
    DegenerateDesignError,
    ResampleExhaustedError,
)

LOG = logging.getLogger("surveyfda")

# Extra attempts made when a Poisson draw selects no unit at all.
PPS_MAX_RETRIES = 10

# Coefficient of the response indicator in the simulation size variable.
SIZE_RESPONSE_EFFECT = 2.0


def _positive_vector(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise DataValidationError(f"{what} must be a non-empty vector")
    bad = np.flatnonzero(~np.isfinite(arr) | (arr <= 0))
    if bad.size:
        i = int(bad[0])
        raise DataValidationError(
            f"{what} must be positive and finite; unit {i} has {arr[i]}"
        )
    return arr


@dataclass(frozen=True)
class SurveyDesign:
    raw_weights: np.ndarray
    scaled_weights: np.ndarray

    @property
    def n(self) -> int:
        return int(self.raw_weights.shape[0])


def scale_weights(raw_weights) -> SurveyDesign:
    """Scale survey weights to sum to the sample size.

    Equal raw weights scale to exactly 1, so a weighted fit on them repeats
    the unweighted fit draw for draw.
    """
    raw = _positive_vector(raw_weights, "survey weights")
    n = raw.shape[0]
    if np.all(raw == raw[0]):
        scaled = np.ones(n)
    else:
        scaled = n * raw / raw.sum()
    return SurveyDesign(raw_weights=raw, scaled_weights=scaled)


def unit_weights(n: int) -> SurveyDesign:
    """The design used by unweighted fits: every scaled weight is 1."""
    ones = np.ones(n)
    return SurveyDesign(raw_weights=ones, scaled_weights=ones.copy())


@dataclass(frozen=True)
class PoissonPpsDesign:
    size_vars: np.ndarray
    inclusion_probs: np.ndarray
    expected_n: float

    @classmethod
    def from_sizes(cls, size_vars, expected_n: float) -> "PoissonPpsDesign":
        """Inclusion probabilities ``min(1, expected_n * s_i / sum(s))``."""
        sizes = _positive_vector(size_vars, "size variables")
        if not expected_n > 0:
            raise DataValidationError(
                f"expected sample size must be positive, got {expected_n}"
            )
        probs = np.minimum(1.0, expected_n * sizes / sizes.sum())
        capped = int(np.sum(probs >= 1.0))
        if capped:
            LOG.debug(
                "%d units have inclusion probability capped at 1",
                capped,
                extra={"event": "survey"},
            )
        return cls(
            size_vars=sizes,
            inclusion_probs=probs,
            expected_n=float(expected_n),
        )


@dataclass(frozen=True)
class PpsSample:
    indices: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return int(self.indices.shape[0])


def make_size_variable(raw_weights, response_flags) -> np.ndarray:
    """Size variable ``exp(w* + 2 * flag)``, where ``w*`` is the raw weight
    standardized to mean 0 and variance 1 (divisor N).
    """
    weights = np.asarray(raw_weights, dtype=float)
    flags = np.asarray(response_flags)
    if weights.ndim != 1 or weights.shape[0] < 2:
        raise DataValidationError("need at least 2 weights")
    if flags.shape != weights.shape:
        raise DataValidationError(
            f"{flags.shape[0]} response flags for {weights.shape[0]} weights"
        )
    if not np.all(np.isfinite(weights)):
        raise DataValidationError("weights must be finite")
    if not np.all(np.isin(flags, (0, 1))):
        raise DataValidationError("response flags must be 0 or 1")

    sd = weights.std()
    if not sd > 0:
        raise DegenerateDesignError(
            "weights have zero variance; cannot standardize"
        )
    standardized = (weights - weights.mean()) / sd
    return np.exp(standardized + SIZE_RESPONSE_EFFECT * flags)


def poisson_pps_sample(design: PoissonPpsDesign, rng: RngStream) -> PpsSample:
    """Select each unit independently with its inclusion probability.

    Returned weights are inverse inclusion probabilities. An empty draw is
    repeated up to ``PPS_MAX_RETRIES`` times.
    """
    probs = design.inclusion_probs

    @backoff.on_predicate(
        wait_gen=backoff.constant,
        predicate=lambda sample: len(sample) == 0,
        max_tries=PPS_MAX_RETRIES + 1,
        interval=0,
        jitter=None,
        logger=LOG,
        backoff_log_level=logging.DEBUG,
    )
    def draw() -> PpsSample:
        selected = rng.generator.random(probs.shape[0]) < probs
        indices = np.flatnonzero(selected)
        return PpsSample(indices=indices, weights=1.0 / probs[indices])

    sample = draw()
    if len(sample) == 0:
        raise ResampleExhaustedError(
            f"Poisson PPS sampling selected no units in "
            f"{PPS_MAX_RETRIES + 1} attempts (expected size "
            f"{design.expected_n})"
        )

    LOG.debug(
        "Poisson PPS sample of %d units (expected %.1f)",
        len(sample),
        design.expected_n,
        extra={"event": "survey"},
    )
    return sample

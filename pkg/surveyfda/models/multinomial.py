"""Categorical/Multinomial responses through the stick-breaking
decomposition into C-1 weighted Binomial fits.

Slice c models the count in category c among the trials left after
categories 1..c-1:

    trials_c = n - sum_{j<c} Z_j,    p~_c = p_c / (1 - sum_{j<c} p_j)

Units with no trials left contribute nothing to slice c. Every slice keeps
the full-sample scaled weights; they are not renormalized per slice.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..distributions import RngStream
from ..errors import (
    DataValidationError,
    ParameterDomainError,
    SurveyFdaError,
)
from ..schemas import SamplerConfig
from ..worker.pool import map_in_threads
from . import binomial

LOG = logging.getLogger("surveyfda")


@dataclass
class CategoricalData:
    counts: np.ndarray
    X: np.ndarray
    Xi: np.ndarray
    w_tilde: np.ndarray
    category_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.ndim != 2 or self.counts.shape[1] < 2:
            raise DataValidationError(
                "category counts must be an (n x C) matrix with C >= 2"
            )
        if np.any(self.counts < 0) or np.any(
            self.counts != np.round(self.counts)
        ):
            raise DataValidationError(
                "category counts must be non-negative integers"
            )
        if np.any(self.counts.sum(axis=1) < 1):
            raise DataValidationError("every unit needs at least one trial")
        if not self.category_names:
            self.category_names = [str(c + 1) for c in range(self.C)]
        if len(self.category_names) != self.C:
            raise DataValidationError(
                f"{len(self.category_names)} category names for "
                f"C={self.C} categories"
            )

    @classmethod
    def from_labels(
        cls,
        labels,
        C: int,
        X: np.ndarray,
        Xi: np.ndarray,
        w_tilde: np.ndarray,
        category_names: list[str] | None = None,
    ) -> "CategoricalData":
        """One trial per unit; ``labels`` take values 1..C."""
        labels = np.asarray(labels)
        if C < 2:
            raise DataValidationError(f"need C >= 2 categories, got {C}")
        bad = np.flatnonzero(
            (labels < 1) | (labels > C) | (labels != np.round(labels))
        )
        if bad.size:
            i = int(bad[0])
            raise DataValidationError(
                f"category label {labels[i]} of unit {i} is outside 1..{C}"
            )
        counts = np.zeros((labels.shape[0], C))
        counts[np.arange(labels.shape[0]), labels.astype(int) - 1] = 1.0
        return cls(
            counts=counts,
            X=X,
            Xi=Xi,
            w_tilde=w_tilde,
            category_names=list(category_names or []),
        )

    @property
    def n(self) -> int:
        return int(self.counts.shape[0])

    @property
    def C(self) -> int:
        return int(self.counts.shape[1])

    @property
    def trials(self) -> np.ndarray:
        return self.counts.sum(axis=1)


@dataclass
class StickBreakingSlice:
    c: int
    Z_c: np.ndarray
    trials_c: np.ndarray
    keep: np.ndarray

    def model_data(self, data: CategoricalData) -> binomial.BinomialModelData:
        return binomial.BinomialModelData(
            Z=self.Z_c[self.keep],
            trials=self.trials_c[self.keep],
            X=np.asarray(data.X, dtype=float)[self.keep],
            Xi=np.asarray(data.Xi, dtype=float)[self.keep],
            w_tilde=np.asarray(data.w_tilde, dtype=float)[self.keep],
            check_weight_sum=False,
        )


def to_stick_breaking(data: CategoricalData) -> list[StickBreakingSlice]:
    counts = data.counts
    remaining = data.trials.copy()
    slices = []
    for c in range(data.C - 1):
        Z_c = counts[:, c]
        slices.append(
            StickBreakingSlice(
                c=c + 1,
                Z_c=Z_c.copy(),
                trials_c=remaining.copy(),
                keep=remaining > 0,
            )
        )
        remaining = remaining - Z_c
    return slices


def slice_stream(seed: int, c: int) -> RngStream:
    """Slice c (1-based) draws from stream ``c - 1`` of the master seed, so
    slice 1 shares its stream with a plain binomial fit.
    """
    return RngStream(seed, c - 1)


def fit_multinomial(
    data: CategoricalData,
    config: SamplerConfig,
    threads: int = 1,
    progress_interval: float = 5.0,
    beta_names: list[str] | None = None,
) -> list[binomial.PosteriorDraws]:
    slices = to_stick_breaking(data)

    def fit_slice(piece: StickBreakingSlice) -> binomial.PosteriorDraws:
        LOG.info(
            "Fitting stick-breaking slice %d of %d (%d units at risk)",
            piece.c,
            len(slices),
            int(piece.keep.sum()),
            extra={"event": "sampler", "slice": piece.c},
        )
        try:
            draws = binomial.fit(
                piece.model_data(data),
                config,
                rng=slice_stream(config.seed, piece.c),
                progress_interval=progress_interval,
                beta_names=beta_names,
            )
        except SurveyFdaError as exc:
            raise exc.annotate(f"slice {piece.c}")
        draws.meta["slice"] = piece.c
        draws.meta["category"] = data.category_names[piece.c - 1]
        return draws

    return map_in_threads(
        fit_slice, slices, threads=threads, name="surveyfda-slice"
    )


def compose_category_probs(ptilde: np.ndarray) -> np.ndarray:
    """Turn conditional probabilities ``(..., C-1)`` into category
    probabilities ``(..., C)``.

    p_1 = p~_1, p_c = p~_c prod_{j<c} (1 - p~_j), p_C = prod_j (1 - p~_j)
    """
    ptilde = np.asarray(ptilde, dtype=float)
    inside = (ptilde > 0) & (ptilde < 1)
    if not np.all(inside):
        raise ParameterDomainError(
            "conditional probabilities must lie strictly inside (0, 1), "
            f"got {ptilde[~inside][0]}"
        )
    survival = np.cumprod(1.0 - ptilde, axis=-1)
    at_risk = np.concatenate(
        [np.ones(ptilde.shape[:-1] + (1,)), survival[..., :-1]], axis=-1
    )
    return np.concatenate(
        [ptilde * at_risk, survival[..., -1:]], axis=-1
    )


def conditional_probs(p: np.ndarray) -> np.ndarray:
    """Inverse of :func:`compose_category_probs`:
    ``p~_c = p_c / (1 - sum_{j<c} p_j)`` for c = 1..C-1.
    """
    p = np.asarray(p, dtype=float)
    used = np.concatenate(
        [np.zeros(p.shape[:-1] + (1,)), np.cumsum(p, axis=-1)[..., :-2]],
        axis=-1,
    )
    return p[..., :-1] / (1.0 - used)


def predict_category_probabilities(
    slice_draws: list[binomial.PosteriorDraws],
    X_new: np.ndarray,
    Xi_new: np.ndarray,
) -> np.ndarray:
    """Per-draw category probabilities, shape (M, m, C)."""
    ptilde = np.stack(
        [
            binomial.predict_probabilities(d, X_new, Xi_new).probabilities
            for d in slice_draws
        ],
        axis=-1,
    )
    return compose_category_probs(ptilde)

"""Random variate generation for the Gibbs sampler.

Every draw goes through an :class:`RngStream`. A stream is identified by a
master seed and a 64-bit stream id; the underlying generator is PCG64
seeded from ``SeedSequence(seed, spawn_key=(stream_id,))``.

Splitting rule: ``stream.spawn(i)`` returns the stream whose id is the
first 64-bit word generated by ``SeedSequence(seed, spawn_key=(stream_id,
i))``. Chains, replicates and model fits each get their own child stream,
so results do not depend on how many threads run them.

Polya-Gamma draws use the infinite sum-of-gammas representation

    PG(b, c) = 1/(2 pi^2) * sum_k g_k / ((k - 1/2)^2 + c^2 / (4 pi^2)),
    g_k ~ Gamma(b, 1),

truncated at ``PG_TRUNCATION`` = 200 terms. The discarded tail is replaced
by its expectation, ``b/(2c) tanh(c/2) - b/(2 pi^2) * sum_{k<=200} 1/d_k``,
which is close to ``b / (2 pi^2 * 200)`` (about 2.5e-4 * b) for moderate c.
The corrected draw has the exact mean and works for any real shape b > 0.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import NumericalSingularityError, ParameterDomainError

LOG = logging.getLogger("surveyfda")

PG_TRUNCATION = 200

# Rows of the (draws x terms) gamma matrix generated at once.
PG_CHUNK_ROWS = 8192

CHOLESKY_JITTER = 1e-8
CHOLESKY_MAX_RETRIES = 3

_UINT64_MAX = 2**64 - 1
_PI2 = np.pi**2
_HALF_SQUARES = (np.arange(1, PG_TRUNCATION + 1) - 0.5) ** 2


@dataclass
class RngStream:
    """A single-owner stream of random numbers.

    Identical ``(seed, stream_id)`` pairs reproduce identical sequences.
    Streams must not be shared between threads; use :meth:`spawn` to
    derive one stream per task instead.
    """

    seed: int
    stream_id: int = 0
    _generator: np.random.Generator | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= int(value) <= _UINT64_MAX:
                raise ParameterDomainError(
                    f"{name} must be a 64-bit unsigned integer, got {value}"
                )
            setattr(self, name, int(value))

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            seq = np.random.SeedSequence(
                self.seed, spawn_key=(self.stream_id,)
            )
            self._generator = np.random.Generator(np.random.PCG64(seq))
        return self._generator

    def spawn(self, index: int) -> "RngStream":
        """Derive the child stream number ``index`` of this stream."""
        seq = np.random.SeedSequence(
            self.seed, spawn_key=(self.stream_id, int(index))
        )
        child_id = int(seq.generate_state(1, dtype=np.uint64)[0])
        return RngStream(self.seed, child_id)


@dataclass(frozen=True)
class PolyaGammaParams:
    b: float
    c: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.b) or self.b <= 0:
            raise ParameterDomainError(
                f"Polya-Gamma shape must be positive and finite, got {self.b}"
            )
        if not np.isfinite(self.c):
            raise ParameterDomainError(
                f"Polya-Gamma tilt must be finite, got {self.c}"
            )


def _pg_mean(b: np.ndarray, c: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    c = np.abs(np.asarray(c, dtype=float))
    small = c < 1e-6
    # tanh(x)/x = 1 - x^2/3 + O(x^4), with x = c/2
    safe_c = np.where(small, 1.0, c)
    return np.where(
        small,
        b / 4.0 * (1.0 - c**2 / 12.0),
        b / (2.0 * safe_c) * np.tanh(safe_c / 2.0),
    )


def polya_gamma_mean(params: PolyaGammaParams) -> float:
    """Analytic mean of PG(b, c): ``b/(2c) tanh(c/2)``, or ``b/4`` at c = 0."""
    return float(_pg_mean(params.b, params.c))


def _pg_truncated_denominators(c: np.ndarray) -> np.ndarray:
    return _HALF_SQUARES[None, :] + (c[:, None] ** 2) / (4.0 * _PI2)


def _pg_tail_mean(b: np.ndarray, c: np.ndarray) -> np.ndarray:
    denom = _pg_truncated_denominators(c)
    truncated = b / (2.0 * _PI2) * np.sum(1.0 / denom, axis=1)
    return _pg_mean(b, c) - truncated


def _pg_series(
    b: np.ndarray, c: np.ndarray, gen: np.random.Generator
) -> np.ndarray:
    out = np.empty(b.shape[0])
    for start in range(0, b.shape[0], PG_CHUNK_ROWS):
        stop = min(start + PG_CHUNK_ROWS, b.shape[0])
        bb = b[start:stop]
        cc = c[start:stop]
        gammas = gen.gamma(
            bb[:, None], 1.0, size=(stop - start, PG_TRUNCATION)
        )
        denom = _pg_truncated_denominators(cc)
        out[start:stop] = np.sum(gammas / denom, axis=1) / (2.0 * _PI2)
        out[start:stop] += _pg_tail_mean(bb, cc)
    return out


def sample_polya_gamma_array(
    b: np.ndarray, c: np.ndarray, rng: RngStream
) -> np.ndarray:
    """Draw ``PG(b[i], c[i])`` independently for every i."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if b.shape != c.shape or b.ndim != 1:
        raise ParameterDomainError(
            f"Polya-Gamma shape/tilt must be matching vectors, "
            f"got {b.shape} and {c.shape}"
        )
    bad = np.flatnonzero(~np.isfinite(b) | (b <= 0) | ~np.isfinite(c))
    if bad.size:
        i = int(bad[0])
        raise ParameterDomainError(
            f"invalid Polya-Gamma parameters at index {i}: "
            f"b={b[i]}, c={c[i]}"
        )
    return _pg_series(b, c, rng.generator)


def sample_polya_gamma(
    params: PolyaGammaParams, rng: RngStream, size: int | None = None
):
    """Draw from PG(b, c): a float, or an array when ``size`` is given."""
    count = 1 if size is None else int(size)
    draws = _pg_series(
        np.full(count, float(params.b)),
        np.full(count, float(params.c)),
        rng.generator,
    )
    return float(draws[0]) if size is None else draws


def cholesky_with_jitter(precision: np.ndarray, block: str) -> np.ndarray:
    """Lower Cholesky factor of ``precision``.

    If factorization fails, ``1e-8 * mean(diag)`` is added to the diagonal
    and the factorization retried, doubling the jitter each time, up to
    ``CHOLESKY_MAX_RETRIES`` times.
    """
    precision = np.asarray(precision, dtype=float)
    k = precision.shape[0]
    mean_diag = float(np.mean(np.abs(np.diag(precision)))) if k else 1.0
    if not np.isfinite(mean_diag) or mean_diag == 0.0:
        mean_diag = 1.0

    jitter = 0.0
    for attempt in range(CHOLESKY_MAX_RETRIES + 1):
        try:
            return linalg.cholesky(
                precision + jitter * np.eye(k), lower=True, check_finite=True
            )
        except (linalg.LinAlgError, ValueError):
            jitter = (
                CHOLESKY_JITTER * mean_diag if attempt == 0 else jitter * 2
            )
            LOG.debug(
                "Cholesky failed for %s block, retrying with jitter %g",
                block,
                jitter,
                extra={"event": "sampler"},
            )

    raise NumericalSingularityError(
        f"precision matrix of the {block} block is not positive definite "
        f"after {CHOLESKY_MAX_RETRIES} jitter retries",
        block=block,
    )


def gaussian_moments_from_precision(
    precision: np.ndarray, linear_term: np.ndarray, block: str = "b"
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(precision^-1 linear_term, lower Cholesky factor)``."""
    chol = cholesky_with_jitter(precision, block)
    mean = linalg.cho_solve((chol, True), np.asarray(linear_term, float))
    return mean, chol


def sample_mvn_from_precision(
    precision: np.ndarray,
    linear_term: np.ndarray,
    rng: RngStream,
    block: str = "b",
) -> np.ndarray:
    """Draw from ``N(precision^-1 linear_term, precision^-1)``.

    Uses one Cholesky factorization and triangular solves; the inverse is
    never formed. Only the lower triangle of ``precision`` is read.
    """
    linear_term = np.asarray(linear_term, dtype=float)
    if linear_term.shape[0] == 0:
        return np.zeros(0)

    mean, chol = gaussian_moments_from_precision(
        precision, linear_term, block
    )
    z = rng.generator.standard_normal(linear_term.shape[0])
    return mean + linalg.solve_triangular(chol, z, lower=True, trans="T")


def sample_inverse_gamma(shape, scale, rng: RngStream, size=None):
    """Draw from IG(shape, scale), density ∝ x^(-shape-1) exp(-scale/x).

    ``shape`` and ``scale`` may be arrays, in which case they broadcast.
    """
    shape_arr = np.asarray(shape, dtype=float)
    scale_arr = np.asarray(scale, dtype=float)
    for name, arr in (("shape", shape_arr), ("scale", scale_arr)):
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ParameterDomainError(
                f"inverse-gamma {name} must be positive and finite, "
                f"got {arr}"
            )

    if size is None:
        size = (
            np.broadcast_shapes(shape_arr.shape, scale_arr.shape) or None
        )

    draws = scale_arr / rng.generator.gamma(shape_arr, 1.0, size=size)
    if np.ndim(draws) == 0:
        return float(draws)
    return draws

"""Gibbs sampler for the weighted Binomial pseudo-likelihood model.

    Z_i ~ Bin(n_i, p_i)^{w_i}            (pseudo-likelihood, scaled weights)
    logit(p_i) = x_i' beta + xi_i' b
    beta ~ N_q(0, sigma2_beta I)
    b(k) | lambda_k, tau ~ N(0, lambda_k^2 tau^2)
    lambda_k^2 | nu_k ~ IG(1/2, 1/nu_k),  tau^2 | nu_tau ~ IG(1/2, 1/nu_tau)
    nu_1..nu_K, nu_tau ~ IG(1/2, 1)

Polya-Gamma augmentation makes both coefficient blocks conditionally
Gaussian. One sweep updates omega, b, beta, lambda^2, tau^2 and finally
nu, nu_tau, in that order.
"""

import logging
from dataclasses import dataclass, field
from time import monotonic
from typing import Any

import numpy as np
from scipy.special import expit, gammaln

from ..distributions import (
    RngStream,
    sample_inverse_gamma,
    sample_mvn_from_precision,
    sample_polya_gamma_array,
)
from ..errors import (
    DataValidationError,
    NumericalSingularityError,
    SurveyFdaError,
)
from ..schemas import PriorKind, SamplerConfig
from ..worker.pool import map_in_threads
from ..worker.progress import ProgressLogger

LOG = logging.getLogger("surveyfda")

# Linear predictors are clamped to this range when reporting probabilities.
PREDICTOR_CLAMP = 35.0


def _matrix(values, n: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1 and arr.shape[0] == 0:
        arr = np.zeros((n, 0))
    if arr.ndim != 2 or arr.shape[0] != n:
        raise DataValidationError(
            f"{what} must have {n} rows, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise DataValidationError(f"{what} contains non-finite values")
    return arr


@dataclass
class BinomialModelData:
    Z: np.ndarray
    trials: np.ndarray
    X: np.ndarray
    Xi: np.ndarray
    w_tilde: np.ndarray
    check_weight_sum: bool = True

    def __post_init__(self):
        self.Z = np.asarray(self.Z, dtype=float)
        self.trials = np.asarray(self.trials, dtype=float)
        self.w_tilde = np.asarray(self.w_tilde, dtype=float)
        n = self.Z.shape[0]
        if self.Z.ndim != 1 or n == 0:
            raise DataValidationError("responses must be a non-empty vector")
        for name in ("trials", "w_tilde"):
            if getattr(self, name).shape != (n,):
                raise DataValidationError(
                    f"{name} must have length {n}, got "
                    f"{getattr(self, name).shape}"
                )
        self.X = _matrix(self.X, n, "X")
        self.Xi = _matrix(self.Xi, n, "Xi")

        if np.any(self.Z != np.round(self.Z)) or np.any(
            self.trials != np.round(self.trials)
        ):
            raise DataValidationError("counts must be integers")
        if np.any(self.trials < 1):
            raise DataValidationError("trial counts must be positive")
        bad = np.flatnonzero((self.Z < 0) | (self.Z > self.trials))
        if bad.size:
            i = int(bad[0])
            raise DataValidationError(
                f"unit {i} has {self.Z[i]} successes in "
                f"{self.trials[i]} trials"
            )
        if not np.all(np.isfinite(self.w_tilde)) or np.any(
            self.w_tilde <= 0
        ):
            raise DataValidationError("scaled weights must be positive")
        if self.check_weight_sum and abs(self.w_tilde.sum() - n) > 1e-6:
            raise DataValidationError(
                f"scaled weights sum to {self.w_tilde.sum()}, expected {n}"
            )

    @property
    def n(self) -> int:
        return int(self.Z.shape[0])

    @property
    def q(self) -> int:
        return int(self.X.shape[1])

    @property
    def K(self) -> int:
        return int(self.Xi.shape[1])

    def subset(self, mask: np.ndarray) -> "BinomialModelData":
        """Restrict to the units selected by ``mask``, keeping their weights
        as they are.
        """
        return BinomialModelData(
            Z=self.Z[mask],
            trials=self.trials[mask],
            X=self.X[mask],
            Xi=self.Xi[mask],
            w_tilde=self.w_tilde[mask],
            check_weight_sum=False,
        )


@dataclass
class ModelState:
    omega: np.ndarray
    beta: np.ndarray
    b: np.ndarray
    lambda2: np.ndarray
    tau2: float
    nu: np.ndarray
    nu_tau: float

    def check(self):
        """Raise if any component is non-finite or any variance-type
        component is not strictly positive.
        """
        for name in ("beta", "b"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise NumericalSingularityError(
                    f"state component {name} is not finite", block=name
                )
        for name in ("omega", "lambda2", "tau2", "nu", "nu_tau"):
            value = np.asarray(getattr(self, name))
            if not np.all(np.isfinite(value)) or np.any(value <= 0):
                raise NumericalSingularityError(
                    f"state component {name} must be positive and finite",
                    block=name,
                )


@dataclass
class PosteriorDraws:
    beta_draws: np.ndarray
    b_draws: np.ndarray
    tau2_draws: np.ndarray
    lambda2_draws: np.ndarray
    chain: np.ndarray
    beta_names: list[str] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def M(self) -> int:
        return int(self.beta_draws.shape[0])

    @property
    def q(self) -> int:
        return int(self.beta_draws.shape[1])

    @property
    def K(self) -> int:
        return int(self.b_draws.shape[1])


@dataclass
class Prediction:
    probabilities: np.ndarray
    mean: np.ndarray

    def interval(self, level: float = 0.9) -> tuple[np.ndarray, np.ndarray]:
        alpha = (1.0 - level) / 2.0
        lower, upper = np.quantile(
            self.probabilities, [alpha, 1.0 - alpha], axis=0
        )
        return lower, upper


def linear_predictor(state: ModelState, data: BinomialModelData):
    return data.X @ state.beta + data.Xi @ state.b


def kappa_vector(data: BinomialModelData) -> np.ndarray:
    return data.w_tilde * (data.Z - data.trials / 2.0)


def log_pseudo_likelihood(state: ModelState, data: BinomialModelData):
    """``sum_i w_i log Bin(Z_i | n_i, p_i)`` at the state's predictor."""
    psi = linear_predictor(state, data)
    log_choose = (
        gammaln(data.trials + 1)
        - gammaln(data.Z + 1)
        - gammaln(data.trials - data.Z + 1)
    )
    loglik = log_choose + data.Z * psi - data.trials * np.logaddexp(0, psi)
    return float(np.sum(data.w_tilde * loglik))


def log_pseudo_likelihood_kernel(state: ModelState, data: BinomialModelData):
    """``log prod (e^psi)^{Z*} / (1 + e^psi)^{n*}`` with weighted counts
    ``Z* = w Z`` and ``n* = w n``; omits the binomial coefficients.
    """
    psi = linear_predictor(state, data)
    z_star = data.w_tilde * data.Z
    n_star = data.w_tilde * data.trials
    return float(np.sum(z_star * psi - n_star * np.logaddexp(0, psi)))


def step_omega(
    state: ModelState, data: BinomialModelData, rng: RngStream
) -> np.ndarray:
    return sample_polya_gamma_array(
        data.w_tilde * data.trials, linear_predictor(state, data), rng
    )


def b_conditional(
    state: ModelState,
    data: BinomialModelData,
    config: SamplerConfig | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Precision and linear term of the Gaussian full conditional of b.

    precision = Xi' Omega Xi + Lambda^-1 / tau^2
    linear    = Xi' (kappa - Omega X beta)
    """
    config = config or SamplerConfig()
    if config.prior == PriorKind.normal:
        prior_precision = np.full(data.K, 1.0 / config.sigma2_b)
    else:
        prior_precision = 1.0 / (state.tau2 * state.lambda2)

    weighted = data.Xi * state.omega[:, None]
    precision = data.Xi.T @ weighted + np.diag(prior_precision)
    offset = state.omega * (data.X @ state.beta)
    linear = data.Xi.T @ (kappa_vector(data) - offset)
    return precision, linear


def beta_conditional(
    state: ModelState,
    data: BinomialModelData,
    config: SamplerConfig | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Precision and linear term of the Gaussian full conditional of beta.

    precision = X' Omega X + I / sigma2_beta
    linear    = X' (kappa - Omega Xi b)
    """
    config = config or SamplerConfig()
    weighted = data.X * state.omega[:, None]
    precision = data.X.T @ weighted + np.eye(data.q) / config.sigma2_beta
    offset = state.omega * (data.Xi @ state.b)
    linear = data.X.T @ (kappa_vector(data) - offset)
    return precision, linear


def step_b(
    state: ModelState,
    data: BinomialModelData,
    rng: RngStream,
    config: SamplerConfig | None = None,
) -> np.ndarray:
    if data.K == 0:
        return np.zeros(0)
    precision, linear = b_conditional(state, data, config)
    return sample_mvn_from_precision(precision, linear, rng, block="b")


def step_beta(
    state: ModelState,
    data: BinomialModelData,
    rng: RngStream,
    config: SamplerConfig | None = None,
) -> np.ndarray:
    precision, linear = beta_conditional(state, data, config)
    return sample_mvn_from_precision(precision, linear, rng, block="beta")


def step_lambda2(state: ModelState, rng: RngStream) -> np.ndarray:
    if state.b.shape[0] == 0:
        return np.zeros(0)
    scale = 1.0 / state.nu + state.b**2 / (2.0 * state.tau2)
    return np.atleast_1d(sample_inverse_gamma(1.0, scale, rng))


def step_tau2(state: ModelState, rng: RngStream) -> float:
    K = state.b.shape[0]
    scale = 1.0 / state.nu_tau + np.sum(state.b**2 / (2.0 * state.lambda2))
    return float(sample_inverse_gamma((K + 1) / 2.0, scale, rng))


def step_nu(state: ModelState, rng: RngStream) -> tuple[np.ndarray, float]:
    if state.lambda2.shape[0]:
        nu = np.atleast_1d(
            sample_inverse_gamma(1.0, 1.0 + 1.0 / state.lambda2, rng)
        )
    else:
        nu = np.zeros(0)
    nu_tau = float(sample_inverse_gamma(1.0, 1.0 + 1.0 / state.tau2, rng))
    return nu, nu_tau


def initial_state(data: BinomialModelData, rng: RngStream) -> ModelState:
    """beta = 0, b = 0, every scale 1, omega drawn once at that state."""
    state = ModelState(
        omega=np.ones(data.n),
        beta=np.zeros(data.q),
        b=np.zeros(data.K),
        lambda2=np.ones(data.K),
        tau2=1.0,
        nu=np.ones(data.K),
        nu_tau=1.0,
    )
    state.omega = step_omega(state, data, rng)
    return state


def gibbs_sweep(
    state: ModelState,
    data: BinomialModelData,
    rng: RngStream,
    config: SamplerConfig,
) -> ModelState:
    """One full sweep, updating ``state`` in place."""
    state.omega = step_omega(state, data, rng)
    state.b = step_b(state, data, rng, config)
    state.beta = step_beta(state, data, rng, config)
    if config.prior == PriorKind.horseshoe:
        state.lambda2 = step_lambda2(state, rng)
        state.tau2 = step_tau2(state, rng)
        state.nu, state.nu_tau = step_nu(state, rng)
    return state


def _run_chain(
    data: BinomialModelData,
    config: SamplerConfig,
    rng: RngStream,
    chain: int,
    progress_interval: float,
) -> dict[str, np.ndarray]:
    M = config.retained
    out = {
        "beta": np.empty((M, data.q)),
        "b": np.empty((M, data.K)),
        "tau2": np.empty(M),
        "lambda2": np.empty((M, data.K)),
    }
    progress = ProgressLogger(
        message=f"Gibbs sweeps (chain {chain})",
        items_total=config.iterations,
        interval=progress_interval,
        extra={"chain": chain},
    )
    start = monotonic()

    state = initial_state(data, rng)
    kept = 0
    for it in range(config.iterations):
        try:
            gibbs_sweep(state, data, rng, config)
            if config.validate_state:
                state.check()
        except SurveyFdaError as exc:
            raise exc.annotate(f"chain {chain}, iteration {it}")

        since_burn_in = it - config.burn_in + 1
        if since_burn_in > 0 and since_burn_in % config.thin == 0:
            out["beta"][kept] = state.beta
            out["b"][kept] = state.b
            out["tau2"][kept] = state.tau2
            out["lambda2"][kept] = state.lambda2
            kept += 1
        progress.update(1)

    LOG.info(
        "Chain %d finished: %d draws retained",
        chain,
        kept,
        extra={
            "event": "sampler",
            "chain": chain,
            "success": True,
            "duration_ms": int((monotonic() - start) * 1000),
        },
    )
    return out


def fit(
    data: BinomialModelData,
    config: SamplerConfig,
    rng: RngStream | None = None,
    threads: int = 1,
    progress_interval: float = 5.0,
    beta_names: list[str] | None = None,
) -> PosteriorDraws:
    """Run ``config.chains`` Gibbs chains and collect post-burn-in draws.

    Chain 0 draws from ``rng`` (by default stream 0 of ``config.seed``);
    chain j > 0 from ``rng.spawn(j)``.
    """
    rng = rng or RngStream(config.seed, 0)
    streams = [rng] + [rng.spawn(j) for j in range(1, config.chains)]

    LOG.info(
        "Fitting binomial model: n=%d, q=%d, K=%d, %d chain(s) of %d sweeps",
        data.n,
        data.q,
        data.K,
        config.chains,
        config.iterations,
        extra={"event": "sampler"},
    )
    results = map_in_threads(
        lambda job: _run_chain(
            data, config, job[1], job[0], progress_interval
        ),
        list(enumerate(streams)),
        threads=threads,
        name="surveyfda-chain",
    )

    M = config.retained
    return PosteriorDraws(
        beta_draws=np.concatenate([r["beta"] for r in results]),
        b_draws=np.concatenate([r["b"] for r in results]),
        tau2_draws=np.concatenate([r["tau2"] for r in results]),
        lambda2_draws=np.concatenate([r["lambda2"] for r in results]),
        chain=np.repeat(np.arange(config.chains), M),
        beta_names=list(beta_names or [f"x{j}" for j in range(data.q)]),
        meta={"sampler": config.model_dump(mode="json"), "n": data.n},
    )


def predict_probabilities(
    draws: PosteriorDraws, X_new: np.ndarray, Xi_new: np.ndarray
) -> Prediction:
    """Per-draw probabilities ``logistic(x' beta + xi' b)`` for new units."""
    X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
    Xi_new = np.asarray(Xi_new, dtype=float)
    if Xi_new.ndim == 1:
        Xi_new = Xi_new.reshape(X_new.shape[0], -1)
    if X_new.shape[1] != draws.q:
        raise DataValidationError(
            f"X has {X_new.shape[1]} columns but draws have q={draws.q}"
        )
    if Xi_new.shape != (X_new.shape[0], draws.K):
        raise DataValidationError(
            f"Xi has shape {Xi_new.shape}, expected "
            f"({X_new.shape[0]}, {draws.K})"
        )

    psi = draws.beta_draws @ X_new.T + draws.b_draws @ Xi_new.T
    probabilities = expit(np.clip(psi, -PREDICTOR_CLAMP, PREDICTOR_CLAMP))
    return Prediction(
        probabilities=probabilities, mean=probabilities.mean(axis=0)
    )

import mock
import numpy as np
import pytest

from surveyfda.distributions import RngStream
from surveyfda.errors import (
    DataValidationError,
    DegenerateDesignError,
    ResampleExhaustedError,
)
from surveyfda.models import binomial
from surveyfda.models.binomial import BinomialModelData
from surveyfda.schemas import SamplerConfig
from surveyfda.survey import (
    PPS_MAX_RETRIES,
    PoissonPpsDesign,
    make_size_variable,
    poisson_pps_sample,
    scale_weights,
    unit_weights,
)


def test_scale_weights_small():
    design = scale_weights([2.0, 4.0, 6.0])

    assert np.allclose(design.scaled_weights, [1.0, 2.0, 3.0])
    assert design.n == 3


def test_scale_constant_weights():
    design = scale_weights(np.full(7, 12.5))

    assert np.allclose(design.scaled_weights, 1.0)


@pytest.mark.parametrize("n,w", [(6, 0.1), (3, 1e-7), (49, 3.3)])
def test_scale_equal_weights_exactly_one(n, w):
    design = scale_weights([w] * n)

    assert np.array_equal(design.scaled_weights, np.ones(n))


def test_equal_weights_repeat_unweighted_fit():
    gen = np.random.default_rng(4)
    X = np.column_stack([np.ones(6), gen.standard_normal(6)])
    Xi = gen.standard_normal((6, 2))
    config = SamplerConfig(iterations=30, burn_in=10, seed=8)

    def run(w_tilde):
        data = BinomialModelData(
            Z=[1.0, 0.0, 1.0, 1.0, 0.0, 0.0],
            trials=np.ones(6),
            X=X,
            Xi=Xi,
            w_tilde=w_tilde,
        )
        return binomial.fit(data, config, progress_interval=1e9)

    weighted = run(scale_weights([0.1] * 6).scaled_weights)
    unweighted = run(np.ones(6))

    assert np.array_equal(weighted.beta_draws, unweighted.beta_draws)
    assert np.array_equal(weighted.b_draws, unweighted.b_draws)


def test_scale_weights_idempotent():
    raw = np.random.default_rng(1).lognormal(3.0, 1.0, size=40)

    once = scale_weights(raw).scaled_weights
    twice = scale_weights(once).scaled_weights

    assert np.allclose(twice, once, rtol=1e-12, atol=0)


def test_scale_large_weights_sum_to_n():
    raw = np.random.default_rng(0).uniform(5e3, 8e4, size=5000)

    design = scale_weights(raw)

    assert abs(design.scaled_weights.sum() - 5000) < 1e-8
    assert np.array_equal(design.raw_weights, raw)


@pytest.mark.parametrize(
    "weights", [[1.0, 0.0], [1.0, -2.0], [1.0, np.inf], [], [[1.0]]]
)
def test_scale_weights_rejects(weights):
    with pytest.raises(DataValidationError):
        scale_weights(weights)


def test_unit_weights():
    design = unit_weights(4)

    assert np.array_equal(design.scaled_weights, np.ones(4))


def test_size_variable_substitution():
    # Mean 1, population sd 1: standardized to (-1, 1).
    sizes = make_size_variable([0.0, 2.0], [0, 1])

    assert np.allclose(sizes, [np.exp(-1.0), np.exp(3.0)])


def test_size_variable_without_responses():
    weights = np.array([1.0, 2.0, 4.0, 8.0])
    standardized = (weights - weights.mean()) / weights.std()

    sizes = make_size_variable(weights, np.zeros(4))

    assert np.allclose(sizes, np.exp(standardized))


def test_size_variable_zero_variance():
    with pytest.raises(DegenerateDesignError):
        make_size_variable([3.0, 3.0, 3.0], [0, 1, 0])


@pytest.mark.parametrize(
    "weights,flags",
    [([1.0, 2.0], [0, 1, 1]), ([1.0, 2.0], [0, 2]), ([1.0], [1])],
)
def test_size_variable_rejects(weights, flags):
    with pytest.raises(DataValidationError):
        make_size_variable(weights, flags)


def test_inclusion_probabilities_capped():
    design = PoissonPpsDesign.from_sizes([1.0, 1.0, 8.0], expected_n=2.0)

    assert np.allclose(design.inclusion_probs, [0.2, 0.2, 1.0])


def test_pps_certain_selection():
    design = PoissonPpsDesign.from_sizes(np.ones(20), expected_n=20)

    sample = poisson_pps_sample(design, RngStream(1))

    assert list(sample.indices) == list(range(20))
    assert np.array_equal(sample.weights, np.ones(20))


def test_pps_realized_size():
    n = 10_000
    design = PoissonPpsDesign.from_sizes(np.ones(n), expected_n=n / 2)

    sample = poisson_pps_sample(design, RngStream(2))

    assert abs(len(sample) - 5000) <= 3 * np.sqrt(n * 0.25)
    assert np.allclose(sample.weights, 2.0)


def test_pps_reproducible():
    design = PoissonPpsDesign.from_sizes(np.arange(1.0, 101.0), 30)

    a = poisson_pps_sample(design, RngStream(5, 9))
    b = poisson_pps_sample(design, RngStream(5, 9))

    assert np.array_equal(a.indices, b.indices)


def test_pps_retries_empty_draws():
    design = PoissonPpsDesign.from_sizes(np.ones(3), expected_n=1.5)
    rng = mock.Mock()
    rng.generator.random.side_effect = [np.ones(3), np.ones(3), np.zeros(3)]

    sample = poisson_pps_sample(design, rng)

    assert rng.generator.random.call_count == 3
    assert len(sample) == 3


def test_pps_exhausted():
    design = PoissonPpsDesign.from_sizes(np.ones(3), expected_n=1.5)
    rng = mock.Mock()
    rng.generator.random.return_value = np.ones(3)

    with pytest.raises(ResampleExhaustedError) as exc_info:
        poisson_pps_sample(design, rng)

    assert rng.generator.random.call_count == PPS_MAX_RETRIES + 1
    assert exc_info.value.exit_code == 2


def test_pps_rejects_bad_expected_size():
    with pytest.raises(DataValidationError):
        PoissonPpsDesign.from_sizes(np.ones(3), expected_n=0)


def test_horvitz_thompson_totals_unbiased():
    gen = np.random.default_rng(11)
    N = 400
    y = gen.gamma(2.0, 3.0, size=N)
    design = PoissonPpsDesign.from_sizes(np.exp(gen.normal(size=N)), 60)
    master = RngStream(12)

    counts, totals = [], []
    for r in range(1000):
        sample = poisson_pps_sample(design, master.spawn(r))
        counts.append(sample.weights.sum())
        totals.append(np.sum(y[sample.indices] * sample.weights))

    for estimates, target in ((counts, N), (totals, y.sum())):
        estimates = np.asarray(estimates)
        se = estimates.std(ddof=1) / np.sqrt(estimates.size)
        assert abs(estimates.mean() - target) <= 3 * se


def test_outcome_dependent_sizes_oversample_responders():
    gen = np.random.default_rng(13)
    N = 2000
    flags = (gen.random(N) < 0.2).astype(int)
    raw = gen.uniform(0.5, 1.5, size=N)
    design = PoissonPpsDesign.from_sizes(
        make_size_variable(raw, flags), expected_n=300
    )
    master = RngStream(14)

    shares, weighted = [], []
    for r in range(200):
        sample = poisson_pps_sample(design, master.spawn(r))
        picked = flags[sample.indices]
        shares.append(picked.mean())
        weighted.append(np.sum(picked * sample.weights) / sample.weights.sum())

    # exp(2) times the size: about two thirds of a sample are responders.
    assert np.mean(shares) > 0.55
    assert np.mean(weighted) == pytest.approx(flags.mean(), abs=0.02)

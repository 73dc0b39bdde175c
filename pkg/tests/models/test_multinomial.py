import mock
import numpy as np
import pytest

from surveyfda.errors import (
    DataValidationError,
    NumericalSingularityError,
    ParameterDomainError,
)
from surveyfda.models import binomial
from surveyfda.models.binomial import BinomialModelData, PosteriorDraws
from surveyfda.models.multinomial import (
    CategoricalData,
    compose_category_probs,
    conditional_probs,
    fit_multinomial,
    predict_category_probabilities,
    slice_stream,
    to_stick_breaking,
)
from surveyfda.schemas import SamplerConfig


def categorical(labels, C, K=0, w=None, seed=0):
    labels = np.asarray(labels)
    n = labels.shape[0]
    gen = np.random.default_rng(seed)
    return CategoricalData.from_labels(
        labels,
        C,
        X=np.ones((n, 1)),
        Xi=gen.standard_normal((n, K)),
        w_tilde=np.ones(n) if w is None else w,
    )


def test_stick_breaking_counts():
    data = CategoricalData(
        counts=[[2.0, 1.0, 3.0]],
        X=np.ones((1, 1)),
        Xi=np.zeros((1, 0)),
        w_tilde=np.ones(1),
    )

    slices = to_stick_breaking(data)

    assert [s.c for s in slices] == [1, 2]
    assert [s.trials_c[0] for s in slices] == [6.0, 4.0]
    assert [s.Z_c[0] for s in slices] == [2.0, 1.0]


def test_stick_breaking_excludes_finished_units():
    slices = to_stick_breaking(categorical([1], 3))

    assert slices[0].Z_c[0] == 1.0
    assert slices[0].trials_c[0] == 1.0
    assert slices[1].trials_c[0] == 0.0
    assert not slices[1].keep[0]


def test_stick_breaking_telescopes():
    counts = np.random.default_rng(1).integers(0, 4, size=(50, 5))
    counts[:, 0] += 1
    data = CategoricalData(
        counts=counts,
        X=np.ones((50, 1)),
        Xi=np.zeros((50, 0)),
        w_tilde=np.ones(50),
    )

    slices = to_stick_breaking(data)

    remainder = slices[-1].trials_c - slices[-1].Z_c
    total = sum(s.Z_c for s in slices) + remainder
    assert np.array_equal(total, data.trials)
    assert np.array_equal(remainder, counts[:, -1])
    for s in slices:
        assert np.all(s.Z_c <= s.trials_c)


def test_slice_model_data_keeps_weights():
    w = np.array([0.5, 1.0, 1.5])
    data = categorical([1, 2, 3], 3, w=w)

    piece = to_stick_breaking(data)[1].model_data(data)

    assert piece.n == 2
    assert np.array_equal(piece.w_tilde, [1.0, 1.5])
    assert np.array_equal(piece.Z, [1.0, 0.0])


@pytest.mark.parametrize("labels", [[0, 1], [1, 4], [1.5, 2]])
def test_labels_out_of_range(labels):
    with pytest.raises(DataValidationError):
        categorical(labels, 3)


def test_category_names_default():
    data = categorical([1, 2], 2)

    assert data.category_names == ["1", "2"]
    assert data.C == 2


def test_compose_half_half():
    p = compose_category_probs(np.array([0.5, 0.5]))

    assert np.allclose(p, [0.5, 0.25, 0.25])


def test_compose_vanishing_conditionals():
    p = compose_category_probs(np.full(5, 1e-15))

    assert np.allclose(p, [0, 0, 0, 0, 0, 1], atol=1e-14)


def test_compose_round_trip():
    ptilde = np.random.default_rng(2).uniform(0.2, 0.8, size=(200, 7, 5))

    p = compose_category_probs(ptilde)

    assert p.shape == (200, 7, 6)
    assert np.allclose(conditional_probs(p), ptilde, rtol=0, atol=1e-12)


def test_compose_simplex_and_cumulative_order():
    ptilde = np.random.default_rng(3).uniform(1e-6, 1 - 1e-6, size=(500, 3))

    p = compose_category_probs(ptilde)

    assert np.all(p >= 0)
    assert np.allclose(p.sum(axis=-1), 1.0, rtol=0, atol=1e-12)
    assert np.all(np.diff(np.cumsum(p, axis=-1), axis=-1) >= 0)


@pytest.mark.parametrize("bad", [0.0, 1.0, 1.2, -0.1, np.nan])
def test_compose_domain(bad):
    with pytest.raises(ParameterDomainError):
        compose_category_probs(np.array([0.3, bad]))


def test_slice_streams_are_distinct():
    assert slice_stream(5, 1).stream_id == 0
    assert slice_stream(5, 2) != slice_stream(5, 1)


def test_two_categories_match_binomial_fit(weighted_data, quick_sampler):
    labels = 2 - weighted_data.Z.clip(0, 1)
    n = weighted_data.n
    data = CategoricalData.from_labels(
        labels,
        2,
        X=weighted_data.X,
        Xi=weighted_data.Xi,
        w_tilde=weighted_data.w_tilde,
    )
    binary = BinomialModelData(
        Z=(labels == 1).astype(float),
        trials=np.ones(n),
        X=weighted_data.X,
        Xi=weighted_data.Xi,
        w_tilde=weighted_data.w_tilde,
    )

    (sliced,) = fit_multinomial(data, quick_sampler, progress_interval=1e9)
    direct = binomial.fit(binary, quick_sampler, progress_interval=1e9)

    assert np.array_equal(sliced.beta_draws, direct.beta_draws)
    assert np.array_equal(sliced.b_draws, direct.b_draws)
    assert np.array_equal(sliced.tau2_draws, direct.tau2_draws)
    assert sliced.meta["slice"] == 1


def test_fit_multinomial_labels_slices(quick_sampler):
    labels = np.tile([1, 2, 3], 10)
    data = categorical(labels, 3, K=2)
    data.category_names = ["dead", "alive", "censored"]

    slices = fit_multinomial(
        data, quick_sampler, threads=2, progress_interval=1e9
    )

    assert [d.meta["slice"] for d in slices] == [1, 2]
    assert [d.meta["category"] for d in slices] == ["dead", "alive"]
    assert slices[1].meta["n"] == 20


def test_fit_multinomial_thread_count_is_irrelevant(quick_sampler):
    data = categorical(np.tile([1, 2, 3, 2], 6), 3, K=1)

    serial = fit_multinomial(data, quick_sampler, progress_interval=1e9)
    threaded = fit_multinomial(
        data, quick_sampler, threads=2, progress_interval=1e9
    )

    for a, b in zip(serial, threaded):
        assert np.array_equal(a.beta_draws, b.beta_draws)


def test_fit_multinomial_names_failing_slice(quick_sampler):
    data = categorical(np.tile([1, 2, 3], 5), 3, K=1)
    original = binomial.fit

    def fail_second(model_data, config, rng=None, **kwargs):
        if rng.stream_id == slice_stream(config.seed, 2).stream_id:
            raise NumericalSingularityError("bad block", block="b")
        return original(model_data, config, rng=rng, **kwargs)

    with mock.patch.object(binomial, "fit", side_effect=fail_second):
        with pytest.raises(NumericalSingularityError) as exc_info:
            fit_multinomial(data, quick_sampler, progress_interval=1e9)

    assert str(exc_info.value) == "slice 2: bad block"


def draws_with_intercept(values):
    values = np.asarray(values, dtype=float)
    M = values.shape[0]
    return PosteriorDraws(
        beta_draws=values[:, None],
        b_draws=np.zeros((M, 0)),
        tau2_draws=np.ones(M),
        lambda2_draws=np.zeros((M, 0)),
        chain=np.zeros(M, dtype=int),
    )


def test_predict_category_probabilities():
    slices = [draws_with_intercept([0.0, 0.0]), draws_with_intercept([0, 0])]

    probs = predict_category_probabilities(
        slices, np.ones((3, 1)), np.zeros((3, 0))
    )

    assert probs.shape == (2, 3, 3)
    assert np.allclose(probs, [0.5, 0.25, 0.25])


@pytest.mark.slow
def test_symmetric_categories_intercept_only():
    n = 600
    data = categorical(np.tile([1, 2, 3], n // 3), 3)
    config = SamplerConfig(iterations=1500, burn_in=300, seed=4)
    slices = fit_multinomial(data, config, progress_interval=1e9)
    probs = predict_category_probabilities(
        slices, np.ones((1, 1)), np.zeros((1, 0))
    )
    ptilde = conditional_probs(probs[:, 0, :])

    assert ptilde[:, 0].mean() == pytest.approx(1 / 3, abs=0.02)
    assert ptilde[:, 1].mean() == pytest.approx(1 / 2, abs=0.02)


def category_means(labels, C, seed):
    config = SamplerConfig(iterations=1500, burn_in=300, seed=seed)
    slices = fit_multinomial(
        categorical(labels, C), config, progress_interval=1e9
    )
    probs = predict_category_probabilities(
        slices, np.ones((1, 1)), np.zeros((1, 0))
    )
    return probs[:, 0, :].mean(axis=0)


@pytest.mark.slow
def test_relabelled_categories_give_same_probabilities():
    labels = np.repeat([1, 2, 3], [300, 180, 120])
    # Category c is listed in position order[c - 1] after relabelling.
    order = np.array([3, 1, 2])

    original = category_means(labels, 3, seed=6)
    relabelled = category_means(order[labels - 1], 3, seed=7)

    assert np.allclose(original, [0.5, 0.3, 0.2], atol=0.02)
    assert np.allclose(relabelled[order - 1], original, atol=0.01)


@pytest.mark.slow
def test_unit_order_does_not_matter():
    labels = np.repeat([1, 2, 3], [300, 180, 120])
    shuffled = np.random.default_rng(8).permutation(labels)

    assert np.allclose(
        category_means(shuffled, 3, seed=6),
        category_means(labels, 3, seed=6),
        atol=0.01,
    )

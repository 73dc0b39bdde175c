import logging

import numpy as np
import pandas as pd
import pytest

from surveyfda.basis import CurveGrid
from surveyfda.dataset import FunctionalDataset
from surveyfda.models.binomial import BinomialModelData
from surveyfda.schemas import SamplerConfig
from surveyfda.synthetic import generate_population


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="run long Monte Carlo checks",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def reset_root_logging():
    # Commands install handlers and levels on the root logger; keep tests
    # independent of each other.
    root = logging.getLogger()
    handlers = list(root.handlers)
    level = root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def quick_sampler():
    return SamplerConfig(iterations=60, burn_in=20, seed=11)


@pytest.fixture
def tiny_data():
    """n=20, q=1, K=2 with well-separated covariates."""
    gen = np.random.default_rng(3)
    n = 20
    X = np.ones((n, 1))
    Xi = gen.standard_normal((n, 2))
    Z = (gen.random(n) < 0.5).astype(float)
    return BinomialModelData(
        Z=Z, trials=np.ones(n), X=X, Xi=Xi, w_tilde=np.ones(n)
    )


@pytest.fixture
def weighted_data():
    gen = np.random.default_rng(5)
    n = 40
    X = np.column_stack([np.ones(n), gen.standard_normal(n)])
    Xi = gen.standard_normal((n, 3))
    trials = gen.integers(1, 5, size=n).astype(float)
    Z = np.floor(gen.random(n) * (trials + 1))
    raw = gen.uniform(0.5, 3.0, size=n)
    return BinomialModelData(
        Z=Z, trials=trials, X=X, Xi=Xi, w_tilde=n * raw / raw.sum()
    )


@pytest.fixture
def toy_dataset():
    """Three units on a five-point grid."""
    return FunctionalDataset(
        unit_ids=["a", "b", "c"],
        curves=np.array(
            [
                [0.0, 1.0, 2.0, 1.0, 0.0],
                [1.0, 2.0, 3.0, 2.0, 1.0],
                [0.5, 0.5, 0.5, 0.5, 0.5],
            ]
        ),
        times=np.array([0.0, 15.0, 30.0, 45.0, 60.0]),
        raw_weights=np.array([1.0, 2.0, 3.0]),
        covariates=pd.DataFrame({"age": [60.0, 70.0, 80.0]}),
        Z=np.array([1.0, 0.0, 1.0]),
        trials=np.ones(3),
    )


@pytest.fixture(scope="session")
def small_population():
    return generate_population(120, grid_size=24, seed=7)


@pytest.fixture
def unit_grid():
    return CurveGrid.unit_interval(50)

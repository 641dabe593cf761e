import numpy as np
import pytest

from helios.data import BinningScheme, LabeledDataset, fit_standardizer, prepare_domain
from helios.model import ArchitectureSpec, build
from helios.synth import ClimateParams, generate_domain, preset
from helios.utils import configure_testing_logging


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance runs")
    configure_testing_logging()


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_climate():
    return ClimateParams(name="unit", seasonality=0.3, peak_ghi=1000.0, cloudiness=0.2,
                         temp_mean=20.0, capacity_kw=1000.0, seed=5)


@pytest.fixture(scope="session")
def small_frame(small_climate):
    """Twenty days at 30 minutes: 960 rows."""
    return generate_domain(small_climate, n_days=20)


@pytest.fixture(scope="session")
def small_domain(small_frame):
    return prepare_domain(small_frame, "unit")


@pytest.fixture(scope="session")
def preset_domain():
    return prepare_domain(generate_domain(preset("sunny-dry"), n_days=30), "sunny-dry")


def make_threshold_dataset(n: int, n_features: int, seed: int, split_tag: str = "train",
                           domain_id: str = "toy", n_classes: int = 5,
                           informative: int = 0) -> LabeledDataset:
    """Labels are equal-width bins of one informative column; the rest is noise."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n, n_features))
    labels = np.minimum((x[:, informative] * n_classes).astype(np.int64), n_classes - 1)
    names = tuple(f"f{i}" for i in range(n_features))
    stats = fit_standardizer(x, names)
    binning = BinningScheme(n_classes, tuple(np.linspace(0.0, 1.0, n_classes + 1)), domain_id)
    return LabeledDataset(stats.transform(x), labels, names, binning, stats, split_tag, domain_id)


@pytest.fixture
def threshold_splits():
    train = make_threshold_dataset(600, 4, seed=1, split_tag="train")
    val = make_threshold_dataset(200, 4, seed=2, split_tag="val")
    return train, val


@pytest.fixture
def tiny_spec():
    return ArchitectureSpec(n_features=4, conv_blocks=((4, 3, 1, 1),), fc_hidden=8, n_classes=5)


@pytest.fixture
def default_model():
    return build(ArchitectureSpec(), seed=0)


@pytest.fixture(autouse=True)
def _testing_logging():
    # CLI runs install their own handlers; put test capture back each time
    configure_testing_logging()
    yield

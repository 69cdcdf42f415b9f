import pytest

from kaonlhv import DetectionModel, TaggingWindow, default_constants


@pytest.fixture(scope="session")
def constants():
    return default_constants()


@pytest.fixture
def window():
    return TaggingWindow(10.0, 21.0)


@pytest.fixture
def ideal_detection(window):
    return DetectionModel(eta=1.0, eta_prime=1.0, ks_misid=0.0, kl_misid=0.0, window=window)


@pytest.fixture
def paper_scale_detection(window):
    """Canonical misidentification budget with unit efficiencies."""
    return DetectionModel(eta=1.0, eta_prime=1.0, ks_misid=7.3e-4, kl_misid=5.7e-5, window=window)

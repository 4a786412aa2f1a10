import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fbmdim.fbm import FbmPath

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def stub_path(values_fn, order=8, hurst=0.5):
    t = np.arange((1 << order) + 1) / float(1 << order)
    return FbmPath(hurst, order, values_fn(t), seed=0)


@pytest.fixture
def zero_path():
    return stub_path(lambda t: np.zeros_like(t))


@pytest.fixture
def linear_path():
    return stub_path(lambda t: t)

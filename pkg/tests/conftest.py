import warnings

import numpy as np
import pytest

from szgd import _backend


@pytest.fixture(params=_backend.available())
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    monkeypatch.setattr(_backend, "kernels", _backend.get(request.param))
    monkeypatch.setattr(_backend, "BACKEND", request.param)
    return request.param


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


@pytest.fixture
def gen():
    return np.random.default_rng(20240611)

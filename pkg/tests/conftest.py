import pytest

from regenrates import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile (or load from cache) the numba kernels before any timed test
    _kernels.warm_up()

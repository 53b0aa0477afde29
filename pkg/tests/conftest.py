import numpy as np
import pytest

from wnnsid import kernels
from wnnsid.hankel_ops import HankelMap, HankelParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_hankel_map(rng, r=None, N=None, channels=None, q=None):
    r = r or int(rng.integers(2, 16))
    N = N or int(rng.integers(20, 301))
    c = channels or int(rng.integers(1, 4))
    q = q or int(rng.integers(1, 40))
    w1 = rng.standard_normal((r * c, r * c))
    R = rng.standard_normal((N, q))
    return HankelMap(w1, R, HankelParams(r=r, s=0, N=N), c)


@pytest.fixture(params=kernels.available())
def backend(request):
    previous = kernels.BACKEND
    kernels.use(request.param)
    yield request.param
    kernels.use(previous)


# acceptance lines, printed in the terminal summary so they survive output capture
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[num])

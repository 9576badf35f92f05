import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from srharmonic.kernels import BACKENDS

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in mod.CRITERIA:
        if name in mod.RESULTS:
            terminalreporter.write_line(mod.RESULTS[name])

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(autouse=True)
def _quiet_numpy_warnings():
    # overflow inside an op is the NonFiniteValue path, not a test failure
    with np.errstate(over="ignore", invalid="ignore"):
        yield

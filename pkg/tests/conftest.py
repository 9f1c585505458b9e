import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def toy_dataset():
    from mcid import Dataset

    return Dataset([1.0, 2.0, 0.0], [1, 1, -1])


def direct_risk(x, y, c):
    """Independent recount of the empirical risk at threshold c."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    pred = np.where(x >= c, 1, -1)
    return float(np.mean(pred != y))

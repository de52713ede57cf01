from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rnads.background import BackgroundParams, existence_check

settings.register_profile("rnads", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("rnads")


@pytest.fixture
def schwarzschild_ads():
    """n = 3, eps = 1, kappa = 1, m = 1, q = 0: horizon at s0 = 1."""
    return BackgroundParams(3, 1, 1.0, 1.0, 0.0)


@pytest.fixture
def charged_ads():
    return BackgroundParams(3, 1, 1.0, 1.0, 0.5)


def random_valid_params(rng, n_range=(3, 7), need=1):
    """Draw valid parameter sets (existence check passes) from a seeded generator."""
    out = []
    while len(out) < need:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        eps = int(rng.choice([-1, 0, 1]))
        kappa = float(rng.uniform(0.3, 2.5))
        m = float(rng.uniform(0.05, 2.0))
        q = float(rng.uniform(0.0, 0.95) * m) if rng.random() < 0.6 else 0.0
        p = BackgroundParams(n, eps, kappa, m, q)
        if existence_check(p):
            out.append(p)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance reporting ----------------------------------------------------

ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[num])

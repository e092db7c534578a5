import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from costformer.dataio import DatasetTable

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_table(n=300, d=8, pos_frac=0.1, shift=1.5, missing=0.0, seed=0, origin="generic"):
    """Gaussian classes separated along the first few features."""
    g = np.random.default_rng(seed)
    y = (g.random(n) < pos_frac).astype(int)
    y[:2] = [0, 1]
    X = g.standard_normal((n, d)) + shift * y[:, None] * (np.arange(d) < max(1, d // 3))
    if missing:
        X[g.random(X.shape) < missing] = np.nan
    return DatasetTable(X, y, [f"f{j}" for j in range(d)], origin)


@pytest.fixture
def table_factory():
    return make_table


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

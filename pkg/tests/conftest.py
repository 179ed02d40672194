import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from onetwo.hexlattice import LatticeParams

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []

weight = st.floats(min_value=0.2, max_value=5.0, allow_nan=False, allow_infinity=False)
triples = st.builds(LatticeParams, weight, weight, weight)
angles = st.floats(min_value=0.0, max_value=2 * np.pi, allow_nan=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

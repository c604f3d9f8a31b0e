import os

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@st.composite
def load_vectors(draw, max_n=8, max_m=24, min_m=0):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(min_m, max_m))
    # stars and bars: m balls split by n - 1 cut points
    cuts = sorted(draw(st.lists(st.integers(0, m), min_size=n - 1, max_size=n - 1)))
    edges = [0] + cuts + [m]
    return [edges[i + 1] - edges[i] for i in range(n)]


@pytest.fixture
def rng():
    from rlslab.sampling import RngStream

    return RngStream(12345).generator()


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

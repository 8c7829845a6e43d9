import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from funcgen.path_core import MarketPath

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def simplex_paths(draw, d=None, min_steps=1, max_steps=40, interior=True):
    """Random market-weight paths built from positive capitalizations."""
    d = draw(st.integers(2, 5)) if d is None else d
    n = draw(st.integers(min_steps, max_steps)) + 1
    lo = 0.05 if interior else 0.0
    caps = draw(arrays(np.float64, (n, d), elements=st.floats(lo, 10.0)))
    caps[0] = np.maximum(caps[0], 0.05)
    caps[caps.sum(axis=1) == 0, 0] = 1.0
    w = caps / caps.sum(axis=1, keepdims=True)
    return MarketPath.from_weights(np.arange(n, dtype=float), w)


@pytest.fixture
def hand_path():
    return MarketPath.from_weights([0.0, 1.0, 2.0], [[0.5, 0.5], [0.6, 0.4], [0.5, 0.5]])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(RESULTS, key=lambda c: int(c[1:])):
        ok, detail = RESULTS[cid]
        terminalreporter.write_line(f"{cid} {'PASS' if ok else 'FAIL'}: {detail}")

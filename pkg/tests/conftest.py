import math

import numpy as np
import pytest
from hypothesis import strategies as st

from clbench.se2 import Pose2

# criterion number -> PASS/FAIL line, filled by test_acceptance.py
ACCEPTANCE = {}

finite = st.floats(-50.0, 50.0, allow_nan=False, allow_infinity=False)
angles = st.floats(-math.pi, math.pi, allow_nan=False)
poses = st.builds(Pose2, finite, finite, angles)


def mat(p: Pose2) -> np.ndarray:
    """Homogeneous matrix, built independently of Pose2.as_matrix."""
    c, s = np.cos(p.theta), np.sin(p.theta)
    return np.array([[c, -s, p.x], [s, c, p.y], [0.0, 0.0, 1.0]])


def assert_pose(p, q, tol=1e-12):
    if isinstance(q, Pose2):
        q = (q.x, q.y, q.theta)
    assert p.x == pytest.approx(q[0], abs=tol)
    assert p.y == pytest.approx(q[1], abs=tol)
    d = (p.theta - q[2] + math.pi) % (2 * math.pi) - math.pi
    assert abs(d) <= tol


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])

import math

import numpy as np
import pytest
from hypothesis import given, settings

from clbench.se2 import (IDENTITY, Pose2, compose, integrate_twist, inverse, relative_error, twist_increment,
                         twist_xy, wrap_angle, BodyVelocity)
from conftest import assert_pose, mat, poses

PI = math.pi


@pytest.mark.parametrize("a, b, expected", [
    (IDENTITY, Pose2(3, -2, 0.7), (3, -2, 0.7)),
    (Pose2(1, 0, PI / 2), Pose2(1, 0, 0), (1, 1, PI / 2)),
    (Pose2(0, 0, PI), Pose2(0, 0, PI), (0, 0, 0)),
])
def test_compose_examples(a, b, expected):
    assert_pose(compose(a, b), expected)


@pytest.mark.parametrize("p, expected", [
    (IDENTITY, (0, 0, 0)),
    (Pose2(1, 2, PI / 2), (-2, 1, -PI / 2)),
])
def test_inverse_examples(p, expected):
    assert_pose(inverse(p), expected)


@pytest.mark.parametrize("g, g_star, expected", [
    (Pose2(0.4, -1.0, 2.0), Pose2(0.4, -1.0, 2.0), (0, 0, 0)),
    (IDENTITY, Pose2(1, 1, PI / 4), (1, 1, PI / 4)),
    (Pose2(1, 0, PI / 2), Pose2(1, 1, PI / 2), (1, 0, 0)),
])
def test_relative_error_examples(g, g_star, expected):
    e = relative_error(g, g_star)
    assert e == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("a, expected", [
    (0.0, 0.0), (PI, PI), (-PI, PI), (3 * PI, PI), (2 * PI, 0.0), (-0.5, -0.5), (7.0, 7.0 - 2 * PI),
])
def test_wrap_angle(a, expected):
    assert wrap_angle(a) == pytest.approx(expected, abs=1e-15)
    assert -PI < wrap_angle(a) <= PI


def test_wrap_leaves_in_range_values_bit_exact():
    for a in np.linspace(-PI + 1e-9, PI, 101):
        assert wrap_angle(float(a)) == a


@given(poses, poses)
def test_compose_matches_matrix_product(a, b):
    m = mat(a) @ mat(b)
    assert_pose(compose(a, b), (m[0, 2], m[1, 2], math.atan2(m[1, 0], m[0, 0])), tol=1e-10)


@given(poses, poses, poses)
def test_associative(a, b, c):
    l, r = compose(compose(a, b), c), compose(a, compose(b, c))
    assert_pose(l, (r.x, r.y, r.theta), tol=1e-10)


@given(poses)
def test_inverse_cancels_and_involutes(p):
    assert_pose(compose(p, inverse(p)), (0, 0, 0), tol=1e-12 * (1 + abs(p.x) + abs(p.y)))
    q = inverse(inverse(p))
    assert_pose(q, (p.x, p.y, p.theta), tol=1e-12 * (1 + abs(p.x) + abs(p.y)))


@given(poses)
def test_identity_neutral_and_zero_error(p):
    assert compose(IDENTITY, p) == p
    assert_pose(compose(p, IDENTITY), (p.x, p.y, p.theta))
    assert relative_error(p, p) == pytest.approx((0, 0, 0), abs=1e-12 * (1 + abs(p.x) + abs(p.y)))


@settings(max_examples=50)
@given(poses)
def test_theta_stays_wrapped_under_repeated_composition(p):
    q = IDENTITY
    for _ in range(20):
        q = compose(q, p)
        assert -PI < q.theta <= PI


def test_twist_closed_form_arc():
    # nu = omega = 1 for pi/2 s: quarter circle of radius 1
    p = twist_increment(1.0, 0.0, 1.0, PI / 2)
    assert_pose(p, (1.0, 1.0, PI / 2))


@pytest.mark.parametrize("om", [0.0, 1e-7, -3e-5, 2e-4, 0.5, -2.0])
def test_twist_series_branch_continuous(om):
    # compare against the matrix exponential of the twist
    from scipy.linalg import expm
    vx, vy, dt = 0.8, -0.3, 0.7
    xi = np.array([[0.0, -om, vx], [om, 0.0, vy], [0.0, 0.0, 0.0]]) * dt
    m = expm(xi)
    x, y, th = twist_xy(vx, vy, om, dt)
    assert (x, y) == pytest.approx((m[0, 2], m[1, 2]), abs=1e-14)
    assert th == om * dt


def test_integrate_twist_split_steps():
    p = Pose2(0.3, -0.2, 1.0)
    v = BodyVelocity(0.9, 0.4)
    one = integrate_twist(p, v, 1.0)
    many = p
    for _ in range(100):
        many = integrate_twist(many, v, 0.01)
    assert_pose(many, (one.x, one.y, one.theta), tol=1e-10)


def test_pose_matrix_roundtrip():
    p = Pose2(1.5, -0.25, -2.5)
    q = Pose2.from_matrix(p.as_matrix())
    assert_pose(q, (p.x, p.y, p.theta), tol=1e-15)
    assert (p @ inverse(p)).x == pytest.approx(0.0, abs=1e-15)

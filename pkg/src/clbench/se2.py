"""Planar rigid-body pose algebra.

Poses are immutable ``(x, y, theta)`` triples with ``theta`` kept in
``(-pi, pi]``.  Composition follows the usual convention: ``compose(a, b)``
is the pose of frame ``b`` expressed through frame ``a``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi

# below this |omega*dt| the twist exponential switches to its Taylor series
_SERIES_EPS = 1e-4


def wrap_angle(a: float) -> float:
    """Wrap an angle to ``(-pi, pi]``; in-range values are returned untouched."""
    if -math.pi < a <= math.pi:
        return a
    b = math.fmod(a + math.pi, TWO_PI)
    if b <= 0.0:
        b += TWO_PI
    return b - math.pi


@dataclass(frozen=True, slots=True)
class Pose2:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s, self.x], [s, c, self.y], [0.0, 0.0, 1.0]])

    @classmethod
    def from_matrix(cls, m) -> "Pose2":
        return cls(float(m[0][2]), float(m[1][2]), math.atan2(m[1][0], m[0][0]))

    def __matmul__(self, other: "Pose2") -> "Pose2":
        return compose(self, other)


@dataclass(frozen=True, slots=True)
class BodyVelocity:
    """Forward speed ``nu`` (m/s) and yaw rate ``omega`` (rad/s)."""

    nu: float = 0.0
    omega: float = 0.0


class PoseError(NamedTuple):
    """Body-frame error coordinates of ``g^-1 g*``."""

    x: float
    y: float
    theta: float


IDENTITY = Pose2()


def compose(a: Pose2, b: Pose2) -> Pose2:
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.theta + b.theta)


def inverse(p: Pose2) -> Pose2:
    c, s = math.cos(p.theta), math.sin(p.theta)
    return Pose2(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), -p.theta)


def relative_error(g: Pose2, g_star: Pose2) -> PoseError:
    """Error of the reference ``g_star`` seen from the current pose ``g``."""
    e = compose(inverse(g), g_star)
    return PoseError(e.x, e.y, e.theta)


def twist_xy(vx: float, vy: float, omega: float, dt: float) -> tuple[float, float, float]:
    """Scalar form of :func:`twist_increment`; returns ``(x, y, theta)`` unwrapped."""
    th = omega * dt
    if abs(th) < _SERIES_EPS:
        th2 = th * th
        sa = 1.0 - th2 / 6.0 + th2 * th2 / 120.0
        ca = th / 2.0 - th * th2 / 24.0
    else:
        sa = math.sin(th) / th
        h = math.sin(0.5 * th)
        ca = 2.0 * h * h / th  # 1 - cos without cancellation
    return (sa * vx - ca * vy) * dt, (ca * vx + sa * vy) * dt, th


def twist_increment(vx: float, vy: float, omega: float, dt: float) -> Pose2:
    """Exact SE(2) exponential of the constant body twist ``(vx, vy, omega)`` held for ``dt``."""
    return Pose2(*twist_xy(vx, vy, omega, dt))


def integrate_twist(p: Pose2, vel: BodyVelocity, dt: float) -> Pose2:
    """Advance ``p`` along a unicycle twist held constant for ``dt``."""
    return compose(p, twist_increment(vel.nu, 0.0, vel.omega, dt))


def unwrap(theta: np.ndarray) -> np.ndarray:
    """Continuous heading for plotting/metrics; pose algebra stays wrapped."""
    return np.unwrap(np.asarray(theta, dtype=float))

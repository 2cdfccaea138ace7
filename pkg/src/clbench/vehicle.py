"""Unicycle ground truth with first-order actuator limits."""
from __future__ import annotations

from dataclasses import dataclass

from .se2 import BodyVelocity, Pose2, compose, twist_increment


@dataclass(frozen=True)
class VehicleLimits:
    v_max: float = 1.65
    omega_max: float = 2.0
    a_max: float = 1.0
    alpha_max: float = 2.0

    def __post_init__(self):
        if min(self.v_max, self.omega_max, self.a_max, self.alpha_max) <= 0:
            raise ValueError("vehicle limits must be strictly positive")


@dataclass(frozen=True)
class VehicleState:
    pose: Pose2 = Pose2()
    vel: BodyVelocity = BodyVelocity()
    t: float = 0.0


def _limit(target, current, rate):
    if target - current > rate:
        return current + rate, True
    if target - current < -rate:
        return current - rate, True
    return target, False


def _clip(v, lim):
    if v > lim:
        return lim, True
    if v < -lim:
        return -lim, True
    return v, False


def step_limited(s: VehicleState, cmd: BodyVelocity, limits: VehicleLimits, dt: float):
    """Like :func:`step` but also reports whether any limit was active."""
    if not 0.0 < dt <= 0.1:
        raise ValueError(f"dt={dt} outside (0, 0.1]")
    nu, s1 = _limit(cmd.nu, s.vel.nu, limits.a_max * dt)
    om, s2 = _limit(cmd.omega, s.vel.omega, limits.alpha_max * dt)
    nu, s3 = _clip(nu, limits.v_max)
    om, s4 = _clip(om, limits.omega_max)
    pose = compose(s.pose, twist_increment(nu, 0.0, om, dt))
    return VehicleState(pose, BodyVelocity(nu, om), s.t + dt), (s1 or s2 or s3 or s4)


def step(s: VehicleState, cmd: BodyVelocity, limits: VehicleLimits, dt: float) -> VehicleState:
    """Rate-limit ``cmd``, clamp it, then hold it as a constant twist for ``dt``."""
    return step_limited(s, cmd, limits, dt)[0]


def actual_accel(prev: VehicleState, nxt: VehicleState) -> tuple[float, float]:
    dt = nxt.t - prev.t
    if dt <= 0:
        raise ValueError("states must be in increasing time order")
    return (nxt.vel.nu - prev.vel.nu) / dt, (nxt.vel.omega - prev.vel.omega) / dt

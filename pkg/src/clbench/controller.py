"""Flatness-based tracking: offline reference generation and the real-time law.

The offline stage drives a virtual robot with acceleration inputs so that a
point ``lambda`` ahead of it tracks the desired trajectory; ``lambda`` decays
toward ``epsilon``.  The resulting poses and body velocities become the
reference that the real-time velocity law tracks from the estimated pose.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._loop import flat_accel
from .errors import IntegrationDiverged, SingularOffset
from .se2 import BodyVelocity, Pose2, PoseError, relative_error

MIN_LAMBDA = 1e-9


@dataclass(frozen=True)
class FlatGains:
    c_p: float = 2.0
    c_d: float = 3.0
    c_lambda: float = 1.0
    epsilon: float = 0.05
    lambda0: float = 0.3

    def __post_init__(self):
        if min(self.c_p, self.c_d, self.c_lambda, self.epsilon) <= 0:
            raise ValueError("flat gains must be strictly positive")
        if not self.lambda0 > self.epsilon:
            raise ValueError("lambda0 must exceed epsilon")

    def as_array(self) -> np.ndarray:
        return np.array([self.c_p, self.c_d, self.c_lambda, self.epsilon, self.lambda0])


@dataclass(frozen=True)
class TrackingGains:
    k_x: float = 1.5
    k_y: float = 2.0
    k_theta: float = 3.0

    def __post_init__(self):
        if min(self.k_x, self.k_y, self.k_theta) <= 0:
            raise ValueError("tracking gains must be strictly positive")


@dataclass(frozen=True)
class OffsetState:
    lam: float
    lam_dot: float = 0.0

    @classmethod
    def initial(cls, gains: FlatGains) -> "OffsetState":
        return cls(gains.lambda0, -gains.c_lambda * (gains.lambda0 - gains.epsilon))


@dataclass(frozen=True)
class ControlAccel:
    u1: float
    u2: float


@dataclass(frozen=True, eq=False)
class ReferenceTrajectory:
    """Reference poses and body velocities on a uniform time grid starting at 0."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    nu: np.ndarray
    omega: np.ndarray
    rate: float

    def __len__(self):
        return len(self.t)

    def pose(self, i: int) -> Pose2:
        return Pose2(float(self.x[i]), float(self.y[i]), float(self.theta[i]))

    def velocity(self, i: int) -> BodyVelocity:
        return BodyVelocity(float(self.nu[i]), float(self.omega[i]))

    def as_array(self) -> np.ndarray:
        """Rows of ``(x, y, theta, nu, omega)``, the layout the kernels consume."""
        return np.column_stack([self.x, self.y, self.theta, self.nu, self.omega])


def flat_control(g: Pose2, V: BodyVelocity, off: OffsetState, d_star, dd_star,
                 gains: FlatGains, ddd_star=None) -> ControlAccel:
    """Body-frame accelerations driving the offset point onto ``d_star``.

    Without ``ddd_star`` this is the law exactly as usually written.  Passing
    the target acceleration adds the ``R_lambda^-1 * ddd_star`` feedforward
    that makes the offset-point error dynamics exactly linear.
    """
    if off.lam < MIN_LAMBDA:
        raise SingularOffset(f"offset lambda={off.lam!r} too small")
    ax, ay = (0.0, 0.0) if ddd_star is None else (float(ddd_star[0]), float(ddd_star[1]))
    u1, u2 = flat_accel(g.x, g.y, g.theta, V.nu, V.omega, off.lam, off.lam_dot,
                        float(d_star[0]), float(d_star[1]), float(dd_star[0]), float(dd_star[1]),
                        ax, ay, gains.c_p, gains.c_d, gains.c_lambda)
    return ControlAccel(u1, u2)


def step_offset(off: OffsetState, gains: FlatGains, dt: float) -> OffsetState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    lam = gains.epsilon + (off.lam - gains.epsilon) * math.exp(-gains.c_lambda * dt)
    return OffsetState(lam, -gains.c_lambda * (lam - gains.epsilon))


def offset_at(t: float, gains: FlatGains) -> float:
    """Closed-form offset after time ``t`` from ``lambda0``."""
    return gains.epsilon + (gains.lambda0 - gains.epsilon) * math.exp(-gains.c_lambda * t)


def generate_reference(traj, gains: FlatGains, g0: Pose2, rate: float = 50.0, limits=None,
                       substeps: int = 20, feedforward: bool = True, tail: float = 1.0,
                       backend: str | None = None) -> ReferenceTrajectory:
    """Integrate the virtual robot from rest at ``g0`` against ``traj``.

    The virtual system is stepped at ``rate * substeps`` Hz (semi-implicit:
    accelerations, then an exact constant-twist pose update) and sampled at
    ``rate``.  ``limits`` (a ``VehicleLimits``) bounds accelerations and
    velocities so the reference stays drivable.  The reference continues for
    ``tail`` seconds past the end of ``traj`` to let it settle.
    """
    from .vehicle import VehicleLimits

    limits = limits or VehicleLimits()
    h = 1.0 / (rate * substeps)
    n_out = int(math.ceil((traj.duration + tail) * rate))
    n = n_out * substeps
    ts = np.arange(n + 1) * h
    d, dv, da = traj.eval_many(ts)
    if not feedforward:
        da = np.zeros_like(da)
    lim = np.array([limits.v_max, limits.omega_max, limits.a_max, limits.alpha_max])
    g0a = np.array([g0.x, g0.y, g0.theta])
    out, status = kernels.get(backend).integrate_reference(
        np.ascontiguousarray(d), np.ascontiguousarray(dv), np.ascontiguousarray(da),
        g0a, gains.as_array(), lim, h, substeps)
    if status >= 0:
        raise IntegrationDiverged(f"reference diverged at t={status * h:.2f}s on {traj.name!r}")
    t = np.arange(len(out)) / rate
    return ReferenceTrajectory(t, out[:, 0].copy(), out[:, 1].copy(), out[:, 2].copy(),
                               out[:, 3].copy(), out[:, 4].copy(), rate)


def clamp_velocity(v: BodyVelocity, limits) -> tuple[BodyVelocity, bool]:
    nu = min(max(v.nu, -limits.v_max), limits.v_max)
    om = min(max(v.omega, -limits.omega_max), limits.omega_max)
    return BodyVelocity(nu, om), (nu != v.nu or om != v.omega)


def velocity_command(g_est: Pose2, g_star: Pose2, V_star: BodyVelocity, k: TrackingGains,
                     limits=None) -> BodyVelocity:
    """Velocity command from the body-frame error of the reference seen from ``g_est``."""
    # identical poses give exactly V*, without rounding residue from g^-1 g*
    e = PoseError(0.0, 0.0, 0.0) if g_est == g_star else relative_error(g_est, g_star)
    cmd = BodyVelocity(k.k_x * e.x + V_star.nu, k.k_theta * e.theta + k.k_y * e.y + V_star.omega)
    if limits is not None:
        cmd, _ = clamp_velocity(cmd, limits)
    return cmd

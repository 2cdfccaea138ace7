"""Parametric visual-inertial estimator surrogates.

A surrogate dead-reckons the IMU at full rate and, whenever a delayed visual
fix arrives, resets the pose and velocity to the fix at its capture time and
replays the buffered readings up to the present.  The visual fixes carry a
slowly accumulating map drift (a random walk keyed to distance traveled)
plus white per-frame noise.

This module is the readable, object-level form.  The simulation loop in
``_loop``/``_core`` carries the same mechanization in error-state form.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, StaleFix
from .se2 import BodyVelocity, IDENTITY, Pose2, compose, inverse, twist_increment
from .sensors import ImuBias, ImuReading


class EstimatorMode(str, Enum):
    CLOSED_LOOP_ESTIMATE = "closed_loop_estimate"
    GROUND_TRUTH = "ground_truth"


@dataclass(frozen=True)
class EstimatorConfig:
    name: str = "custom"
    latency: float = 0.0
    output_rate: float = 200.0
    drift_rate_trans: float = 0.0
    drift_rate_rot: float = 0.0
    fix_noise_trans: float = 0.005
    fix_noise_rot: float = 0.002
    latency_jitter: float = 0.0  # uniform +-fraction of latency per fix
    calibrate_bias: bool = True  # estimate IMU bias while static during warmup
    mode: EstimatorMode = EstimatorMode.CLOSED_LOOP_ESTIMATE
    imu: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", EstimatorMode(self.mode))
        if self.latency < 0:
            raise ConfigError("latency must be >= 0")
        if self.output_rate <= 0:
            raise ConfigError("output_rate must be > 0")
        for k in ("drift_rate_trans", "drift_rate_rot", "fix_noise_trans", "fix_noise_rot"):
            if getattr(self, k) < 0:
                raise ConfigError(f"{k} must be >= 0")
        if not 0.0 <= self.latency_jitter < 1.0:
            raise ConfigError("latency_jitter must be in [0, 1)")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["mode"] = self.mode.value
        return d


def ideal(name: str = "ideal", latency: float = 0.0) -> EstimatorConfig:
    """Error-free surrogate apart from ``latency``."""
    return EstimatorConfig(name=name, latency=latency, fix_noise_trans=0.0, fix_noise_rot=0.0)


def _preset_doc() -> dict:
    res = resources.files("clbench") / "data" / "estimators.yaml"
    return yaml.safe_load(res.read_text())


def list_estimators() -> list[str]:
    return list(_preset_doc())


def estimator_from_dict(doc: dict, name: str | None = None) -> EstimatorConfig:
    known = {f.name for f in fields(EstimatorConfig)}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown estimator fields: {sorted(extra)}")
    doc = dict(doc)
    if name is not None:
        doc.setdefault("name", name)
    return EstimatorConfig(**doc)


def load_estimator(source) -> EstimatorConfig:
    """Resolve a preset name, a YAML file, a dict (optionally with ``preset`` as a base) or a config."""
    if isinstance(source, EstimatorConfig):
        return source
    presets = _preset_doc()
    if isinstance(source, (str, Path)) and str(source).endswith((".yaml", ".yml")):
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"estimator file {path} not found")
        return load_estimator(yaml.safe_load(path.read_text()))
    if isinstance(source, str):
        if source not in presets:
            raise ConfigError(f"unknown estimator preset {source!r}; have {list(presets)}")
        return estimator_from_dict(presets[source], name=source)
    if isinstance(source, dict):
        source = dict(source)
        base = source.pop("preset", None)
        if base is not None:
            cfg = load_estimator(base)
            return replace(cfg, **source) if source else cfg
        return estimator_from_dict(source)
    raise ConfigError(f"cannot interpret estimator source {source!r}")


# -- truth access ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TruthHistory:
    """Ground truth on the tick grid; velocity is held constant inside each tick.

    ``nu[k], omega[k]`` apply on ``(t[k], t[k+1]]``.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    nu: np.ndarray
    omega: np.ndarray

    @classmethod
    def from_states(cls, states) -> "TruthHistory":
        states = list(states)
        return cls(
            np.array([s.t for s in states]),
            np.array([s.pose.x for s in states]),
            np.array([s.pose.y for s in states]),
            np.array([s.pose.theta for s in states]),
            np.array([s.vel.nu for s in states[1:]]),
            np.array([s.vel.omega for s in states[1:]]),
        )

    def _interval(self, t: float) -> int:
        if t < self.t[0] or t > self.t[-1]:
            raise ValueError(f"t={t} outside truth history")
        k = int(np.searchsorted(self.t, t, side="left")) - 1
        return max(k, 0)

    def at(self, t: float) -> tuple[Pose2, BodyVelocity]:
        if t == self.t[0]:
            v = BodyVelocity(0.0, 0.0) if len(self.nu) == 0 else BodyVelocity(self.nu[0], self.omega[0])
            return Pose2(self.x[0], self.y[0], self.theta[0]), v
        k = self._interval(t)
        base = Pose2(self.x[k], self.y[k], self.theta[k])
        nu, om = float(self.nu[k]), float(self.omega[k])
        return compose(base, twist_increment(nu, 0.0, om, t - self.t[k])), BodyVelocity(nu, om)

    def distance(self, t: float) -> float:
        """Path length traveled up to ``t``."""
        k = self._interval(t) if t > self.t[0] else 0
        dt = np.diff(self.t[: k + 1])
        done = float(np.sum(np.abs(self.nu[:k]) * dt))
        if t > self.t[0]:
            done += abs(float(self.nu[k])) * (t - self.t[k])
        return done


# -- estimator state ---------------------------------------------------------------

@dataclass(frozen=True)
class DriftState:
    """Accumulated map drift (a world-frame pose perturbation) and the odometer at the last fix."""

    pose: Pose2 = IDENTITY
    odometer: float = 0.0


@dataclass(frozen=True)
class VisualFix:
    t_capture: float
    t_available: float
    pose_meas: Pose2
    vel_meas: BodyVelocity = BodyVelocity()


@dataclass(frozen=True)
class EstimatorState:
    t: float = 0.0
    pose_est: Pose2 = IDENTITY
    vel_xy: tuple[float, float] = (0.0, 0.0)
    bias_est: ImuBias = ImuBias()
    imu_buffer: tuple[ImuReading, ...] = ()
    drift_accum: DriftState = DriftState()
    buffer_span: float = 0.2
    last_gyro: float = 0.0
    dropped: int = 0

    @property
    def vel_est(self) -> BodyVelocity:
        return BodyVelocity(self.vel_xy[0], self.last_gyro)


def buffer_span(cfg: EstimatorConfig, camera_rate: float) -> float:
    """Longest replay window a fix can need: worst-case latency plus a frame period."""
    return cfg.latency * (1.0 + cfg.latency_jitter) + 1.0 / camera_rate


def _mechanize(pose, vx, vy, r: ImuReading, bias: ImuBias, dt: float):
    g = r.gyro - bias.gyro
    vx = vx + (r.accel[0] - bias.accel_x + g * vy) * dt
    vy = vy + (r.accel[1] - bias.accel_y - g * vx) * dt
    return compose(pose, twist_increment(vx, vy, g, dt)), vx, vy, g


def propagate(st: EstimatorState, imu: ImuReading, dt: float | None = None) -> EstimatorState:
    """Dead-reckon one reading and append it to the replay buffer."""
    if imu.t < st.t:
        raise ValueError("IMU reading older than the estimator state")
    dt = imu.dt if dt is None else dt
    imu = replace(imu, dt=dt)
    pose, vx, vy, g = _mechanize(st.pose_est, st.vel_xy[0], st.vel_xy[1], imu, st.bias_est, dt)
    buf = st.imu_buffer + (imu,)
    # keep readings that may still be needed by a late fix
    horizon = imu.t - st.buffer_span
    start = 0
    while start < len(buf) - 1 and buf[start].t <= horizon:
        start += 1
    return replace(st, t=imu.t, pose_est=pose, vel_xy=(vx, vy), imu_buffer=buf[start:], last_gyro=g)


def make_fix(truth: TruthHistory, cfg: EstimatorConfig, drift: DriftState, rng: np.random.Generator,
             t_capture: float, latency: float | None = None) -> tuple[VisualFix, DriftState]:
    """Capture a visual fix and grow the drift by the distance traveled since the last one.

    Draws six standard normals: three for the drift increment, three for the
    per-frame noise (translation x, y, then rotation in each group).
    """
    g_true, v_true = truth.at(t_capture)
    odo = truth.distance(t_capture)
    z = rng.standard_normal(6)
    root = math.sqrt(max(odo - drift.odometer, 0.0))
    delta = Pose2(z[0] * cfg.drift_rate_trans * root, z[1] * cfg.drift_rate_trans * root,
                  z[2] * cfg.drift_rate_rot * root)
    # the increment happens at the robot, not about the world origin
    d_pose = compose(drift.pose, compose(compose(g_true, delta), inverse(g_true)))
    noise = Pose2(z[3] * cfg.fix_noise_trans, z[4] * cfg.fix_noise_trans, z[5] * cfg.fix_noise_rot)
    meas = compose(d_pose, compose(g_true, noise))
    lat = cfg.latency if latency is None else latency
    return VisualFix(t_capture, t_capture + lat, meas, v_true), DriftState(d_pose, odo)


def correct(st: EstimatorState, fix: VisualFix, now: float) -> EstimatorState:
    """Reset to ``fix`` at its capture time, then replay buffered readings up to now.

    Raises :class:`StaleFix` when the buffer no longer reaches back to the capture.
    """
    if fix.t_available > now:
        raise ValueError("fix is not available yet")
    buf = st.imu_buffer
    ends = [r.t for r in buf]
    i = bisect.bisect_left(ends, fix.t_capture)
    if fix.t_capture > st.t:
        raise ValueError("fix captured after the latest reading")
    if i < len(buf) and buf[i].t - buf[i].dt > fix.t_capture + 1e-12:
        raise StaleFix(f"capture t={fix.t_capture:.4f} precedes buffer start")
    if i == len(buf) and (not buf or fix.t_capture < st.t):
        raise StaleFix(f"capture t={fix.t_capture:.4f} not covered by buffer")
    pose = fix.pose_meas
    vx, vy = fix.vel_meas.nu, 0.0
    g = st.last_gyro
    if i < len(buf):
        r = buf[i]
        tau = r.t - fix.t_capture
        g = r.gyro - st.bias_est.gyro
        rest = buf[i + 1:]
        if tau >= r.dt - 1e-12:
            # capture on the reading's start boundary: the whole reading lies after it
            rest = buf[i:]
        elif tau > 0.0:
            pose = compose(pose, twist_increment(vx, vy, g, tau))
        for r in rest:
            pose, vx, vy, g = _mechanize(pose, vx, vy, r, st.bias_est, r.dt)
    return replace(st, pose_est=pose, vel_xy=(vx, vy), imu_buffer=buf[i:], last_gyro=g)


def calibrate(readings) -> ImuBias:
    """Bias estimate from readings taken while the vehicle is known to be static."""
    arr = np.array([(r.accel[0], r.accel[1], r.gyro) for r in readings])
    m = arr.mean(axis=0)
    return ImuBias(float(m[0]), float(m[1]), float(m[2]))


def output(st: EstimatorState, cfg: EstimatorConfig, now: float, truth: Pose2 | None = None) -> Pose2:
    if cfg.mode is EstimatorMode.GROUND_TRUTH:
        if truth is None:
            raise ValueError("ground-truth mode needs the true pose")
        return truth
    return st.pose_est


def output_times(cfg: EstimatorConfig, horizon: float) -> np.ndarray:
    n = int(math.floor(horizon * cfg.output_rate + 1e-9))
    return np.arange(n + 1) / cfg.output_rate

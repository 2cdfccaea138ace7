"""Trajectory error metrics: tracking RMSE, ATE and failure classification."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoAssociation, NoOverlap
from .se2 import Pose2

FAILURE_THRESHOLD = 10.0  # m
ASSOC_TOLERANCE = 0.010  # s


@dataclass(frozen=True, eq=False)
class TimedPath:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float) for a in (self.t, self.x, self.y, self.theta)]
        n = len(arrs[0])
        if any(a.shape != (n,) for a in arrs):
            raise ValueError("t, x, y, theta must be 1-D and equally long")
        if n < 2:
            raise ValueError("a path needs at least 2 samples")
        if np.any(np.diff(arrs[0]) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        for name, a in zip(("t", "x", "y", "theta"), arrs):
            object.__setattr__(self, name, a)

    @classmethod
    def from_poses(cls, t, poses) -> "TimedPath":
        poses = list(poses)
        return cls(np.asarray(t, float), np.array([p.x for p in poses]),
                   np.array([p.y for p in poses]), np.array([p.theta for p in poses]))

    @classmethod
    def from_array(cls, a) -> "TimedPath":
        a = np.asarray(a, dtype=float)
        return cls(a[:, 0], a[:, 1], a[:, 2], a[:, 3])

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.t, self.x, self.y, self.theta])

    def __len__(self):
        return len(self.t)

    def pose(self, i: int) -> Pose2:
        return Pose2(float(self.x[i]), float(self.y[i]), float(self.theta[i]))

    def transformed(self, g: Pose2) -> "TimedPath":
        """Path with the rigid transform ``g`` applied on the left."""
        c, s = math.cos(g.theta), math.sin(g.theta)
        th = np.arctan2(np.sin(self.theta + g.theta), np.cos(self.theta + g.theta))
        return TimedPath(self.t, g.x + c * self.x - s * self.y, g.y + s * self.x + c * self.y, th)

    def interpolate(self, ts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Linear in position, shortest arc in heading."""
        ts = np.asarray(ts, dtype=float)
        x = np.interp(ts, self.t, self.x)
        y = np.interp(ts, self.t, self.y)
        th = np.interp(ts, self.t, np.unwrap(self.theta))
        return x, y, _wrap(th)


@dataclass(frozen=True)
class MetricReport:
    rmse_trans: float
    rmse_yaw: float
    max_err: float
    n_samples: int
    failed: bool

    def to_dict(self) -> dict:
        return {"rmse_trans": self.rmse_trans, "rmse_yaw": self.rmse_yaw, "max_err": self.max_err,
                "n_samples": self.n_samples, "failed": self.failed}


def _wrap(a):
    a = np.asarray(a, dtype=float)
    out = np.mod(a + np.pi, 2 * np.pi) - np.pi
    # keep the (-pi, pi] convention
    return np.where(out == -np.pi, np.pi, out)


def _report(dx, dy, dth) -> MetricReport:
    e2 = dx * dx + dy * dy
    rmse = math.sqrt(float(np.mean(e2)))
    yaw = math.sqrt(float(np.mean(dth * dth)))
    return MetricReport(rmse, yaw, math.sqrt(float(np.max(e2))), int(len(e2)), classify_failure(rmse))


def classify_failure(rmse: float) -> bool:
    if rmse < 0:
        raise ValueError("rmse must be >= 0")
    return rmse > FAILURE_THRESHOLD


def tracking_rmse(desired: TimedPath, actual: TimedPath) -> MetricReport:
    """World-frame translation error of ``actual`` against ``desired`` at actual's timestamps."""
    tol = 1e-9
    sel = (actual.t >= desired.t[0] - tol) & (actual.t <= desired.t[-1] + tol)
    if not np.any(sel):
        raise NoOverlap("desired and actual paths do not overlap in time")
    ts = np.clip(actual.t[sel], desired.t[0], desired.t[-1])
    x, y, th = desired.interpolate(ts)
    return _report(actual.x[sel] - x, actual.y[sel] - y, _wrap(actual.theta[sel] - th))


def associate(a: TimedPath, b: TimedPath, tol: float = ASSOC_TOLERANCE) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs matching each sample of ``a`` to the nearest sample of ``b`` within ``tol``."""
    j = np.clip(np.searchsorted(b.t, a.t), 1, len(b.t) - 1)
    left = b.t[j - 1]
    right = b.t[j]
    j = np.where(np.abs(a.t - left) <= np.abs(right - a.t), j - 1, j)
    ok = np.abs(b.t[j] - a.t) <= tol
    return np.nonzero(ok)[0], j[ok]


def rigid_align(src: np.ndarray, dst: np.ndarray) -> Pose2:
    """Least-squares rotation+translation (no scale) taking ``src`` points onto ``dst``."""
    ms = src.mean(axis=0)
    md = dst.mean(axis=0)
    a = src - ms
    b = dst - md
    cross = float(np.sum(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]))
    dot = float(np.sum(a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]))
    phi = math.atan2(cross, dot)
    c, s = math.cos(phi), math.sin(phi)
    return Pose2(md[0] - (c * ms[0] - s * ms[1]), md[1] - (s * ms[0] + c * ms[1]), phi)


def ate(estimated: TimedPath, truth: TimedPath, align: bool = True,
        tol: float = ASSOC_TOLERANCE) -> MetricReport:
    ia, ib = associate(estimated, truth, tol)
    if len(ia) == 0:
        raise NoAssociation(f"no timestamps within {tol} s")
    est = np.column_stack([estimated.x[ia], estimated.y[ia]])
    ref = np.column_stack([truth.x[ib], truth.y[ib]])
    th = estimated.theta[ia]
    if align:
        g = rigid_align(est, ref)
        c, s = math.cos(g.theta), math.sin(g.theta)
        est = np.column_stack([g.x + c * est[:, 0] - s * est[:, 1], g.y + s * est[:, 0] + c * est[:, 1]])
        th = th + g.theta
    return _report(est[:, 0] - ref[:, 0], est[:, 1] - ref[:, 1], _wrap(th - truth.theta[ib]))

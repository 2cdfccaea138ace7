"""Desired trajectories through waypoints.

The geometry is a natural cubic spline over the chord-length parameter ``s``.
Timing is a separate law ``s(t)`` found with a forward/backward pass over a
fine grid in ``s`` (the classic time-optimal path parameterization scheme):
it starts and ends at rest, never exceeds the desired speed, and keeps the
full acceleration vector ``p''(s) sdot^2 + p'(s) sddot`` inside ``a_max``.
Within a grid cell ``sddot`` is constant, so ``s(t)`` is piecewise quadratic
and ``d*`` is C1 in time with piecewise-continuous acceleration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DegenerateWaypoints, InfeasibleSpeed

MIN_SEPARATION = 1e-6
# smallest |dp/ds| accepted for the chord-length spline (1 on straight runs)
MIN_TANGENT = 0.2
# share of a_max reserved for centripetal acceleration when re-limiting speed on curves
CURVE_SHARE = 0.8
# planning headroom on a_max for curved paths, where |d''| can bulge ~1e-6 above
# the sampled peaks between grid points (straight paths are exact)
A_MARGIN = 1e-4


@dataclass(frozen=True)
class WaypointList:
    points: tuple[tuple[float, float], ...]
    name: str = ""

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise DegenerateWaypoints(f"{self.name or 'waypoints'}: need at least 2 points")
        arr = np.asarray(pts)
        gaps = np.hypot(*np.diff(arr, axis=0).T)
        if np.any(gaps <= MIN_SEPARATION):
            i = int(np.argmin(gaps))
            raise DegenerateWaypoints(f"{self.name or 'waypoints'}: points {i} and {i + 1} coincide")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def length(self) -> float:
        return float(np.hypot(*np.diff(self.as_array(), axis=0).T).sum())


@dataclass(frozen=True)
class TrajectoryLimits:
    v_max: float = 1.65
    a_max: float = 0.5


class MotionProfile(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


def motion_profile(v_des: float) -> MotionProfile:
    if v_des <= 0:
        raise ValueError("v_des must be positive")
    if v_des < 0.75:
        return MotionProfile.LOW
    if v_des < 1.25:
        return MotionProfile.MEDIUM
    return MotionProfile.HIGH


@dataclass(frozen=True, eq=False)
class DesiredTrajectory:
    spline: CubicSpline = field(repr=False)
    s_nodes: np.ndarray = field(repr=False)
    t_nodes: np.ndarray = field(repr=False)
    sdot_nodes: np.ndarray = field(repr=False)
    sddot: np.ndarray = field(repr=False)
    waypoint_times: np.ndarray = field(repr=False)
    duration: float
    v_des: float
    limits: TrajectoryLimits
    name: str = ""

    @property
    def path_length(self) -> float:
        ss = np.linspace(0.0, self.s_nodes[-1], 20 * len(self.s_nodes) + 1)
        d1 = self.spline(ss, 1)
        speed = np.hypot(d1[:, 0], d1[:, 1])
        return float(np.sum(0.5 * (speed[1:] + speed[:-1]) * np.diff(ss)))

    def eval(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Position, velocity and acceleration of d* at time ``t``.

        Outside ``[0, duration]`` the trajectory is clamped to its end points
        with zero velocity and acceleration.
        """
        d, dd, ddd = self.eval_many(np.array([t], dtype=float))
        return d[0], dd[0], ddd[0]

    def eval_many(self, ts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ts = np.asarray(ts, dtype=float)
        s, sd, sdd = self._time_law(ts)
        p0 = self.spline(s)
        p1 = self.spline(s, 1)
        p2 = self.spline(s, 2)
        vel = p1 * sd[:, None]
        acc = p2 * (sd * sd)[:, None] + p1 * sdd[:, None]
        return p0, vel, acc

    def heading_many(self, ts) -> np.ndarray:
        """Tangent direction of the path; well defined even while at rest."""
        s, _, _ = self._time_law(np.asarray(ts, dtype=float))
        p1 = self.spline(s, 1)
        return np.arctan2(p1[:, 1], p1[:, 0])

    def _time_law(self, ts: np.ndarray):
        tn = self.t_nodes
        n_cells = len(self.sddot)
        k = np.clip(np.searchsorted(tn, ts, side="right") - 1, 0, n_cells - 1)
        tau = np.clip(ts, 0.0, self.duration) - tn[k]
        acc = self.sddot[k]
        sd = self.sdot_nodes[k] + acc * tau
        s = self.s_nodes[k] + self.sdot_nodes[k] * tau + 0.5 * acc * tau * tau
        s = np.minimum(s, self.s_nodes[k + 1])
        outside = (ts <= 0.0) | (ts >= self.duration)
        sd = np.where(outside, 0.0, np.maximum(sd, 0.0))
        acc = np.where(outside, 0.0, acc)
        s = np.where(ts <= 0.0, 0.0, np.where(ts >= self.duration, self.s_nodes[-1], s))
        return s, sd, acc


def _accel_interval(p1: np.ndarray, p2: np.ndarray, x: float, a: float):
    """Range of x' = d(sdot^2)/ds keeping |p2 x + p1 x'/2| <= a, or None."""
    qa = 0.25 * (p1 @ p1)
    qb = (p1 @ p2) * x
    qc = (p2 @ p2) * x * x - a * a
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return None
    r = math.sqrt(disc)
    return (-qb - r) / (2.0 * qa), (-qb + r) / (2.0 * qa)


def _ok(iv, xp) -> bool:
    if iv is None:
        return False
    tol = 1e-9 * (1.0 + abs(iv[0]) + abs(iv[1]))
    return iv[0] - tol <= xp <= iv[1] + tol


def _bisect(good, bad, feasible):
    """Push ``good`` (feasible) as close to ``bad`` (infeasible) as possible."""
    for _ in range(60):
        mid = 0.5 * (good + bad)
        if feasible(mid):
            good = mid
        else:
            bad = mid
    return good


def _plan(p1s, p2s, ds, mvc, a):
    """Forward/backward pass over the grid; returns sdot^2 at every node."""
    n = len(mvc)
    fwd = np.zeros(n)
    for k in range(n - 1):
        xk, h = fwd[k], ds[k]
        iv = _accel_interval(p1s[k], p2s[k], xk, a)
        cand = mvc[k + 1] if iv is None else min(mvc[k + 1], xk + iv[1] * h)
        cand = max(cand, 0.0)

        def feas(z, k=k, xk=xk, h=h):
            # the cell's constant slope must be admissible at both of its ends
            xp = (z - xk) / h
            return (_ok(_accel_interval(p1s[k + 1], p2s[k + 1], z, a), xp)
                    and _ok(_accel_interval(p1s[k], p2s[k], xk, a), xp))

        if not feas(cand):
            # coasting (zero sddot) is the natural fallback bracket
            base = min(xk, cand)
            cand = _bisect(base, cand, feas) if feas(base) else base
        fwd[k + 1] = cand
    x = fwd.copy()
    x[-1] = 0.0
    for k in range(n - 2, -1, -1):
        xn, h = x[k + 1], ds[k]
        iv = _accel_interval(p1s[k + 1], p2s[k + 1], xn, a)
        cand = fwd[k] if iv is None else min(fwd[k], xn - iv[0] * h)
        cand = max(cand, 0.0)

        def feas(z, k=k, xn=xn, h=h):
            xp = (xn - z) / h
            return (_ok(_accel_interval(p1s[k], p2s[k], z, a), xp)
                    and _ok(_accel_interval(p1s[k + 1], p2s[k + 1], xn, a), xp))

        if not feas(cand):
            base = min(xn, cand)
            cand = _bisect(base, cand, feas) if feas(base) else base
        x[k] = cand
    return x


def fit_spline(
    wp: WaypointList,
    v_des: float,
    limits: TrajectoryLimits | None = None,
    cell: float = 0.05,
) -> DesiredTrajectory:
    """Fit a rest-to-rest desired trajectory through ``wp`` at cruise speed ``v_des``."""
    limits = limits or TrajectoryLimits()
    if not 0.0 < v_des <= limits.v_max:
        raise InfeasibleSpeed(f"v_des={v_des} outside (0, {limits.v_max}]")
    pts = wp.as_array()
    chord = np.hypot(*np.diff(pts, axis=0).T)
    s_wp = np.concatenate([[0.0], np.cumsum(chord)])
    spline = CubicSpline(s_wp, pts, bc_type="natural")

    pieces = [np.linspace(s_wp[j], s_wp[j + 1], max(1, math.ceil(chord[j] / cell)) + 1)[:-1]
              for j in range(len(chord))]
    s_nodes = np.concatenate(pieces + [s_wp[-1:]])
    wp_index = np.concatenate([[0], np.cumsum([len(p) for p in pieces])])
    ds = np.diff(s_nodes)

    p1s = spline(s_nodes, 1)
    p2s = spline(s_nodes, 2)
    speed_gain = np.hypot(p1s[:, 0], p1s[:, 1])
    cross = np.abs(p1s[:, 0] * p2s[:, 1] - p1s[:, 1] * p2s[:, 0])
    p2n = np.hypot(p2s[:, 0], p2s[:, 1])
    if speed_gain.min() < MIN_TANGENT:
        # the spline nearly stops in space (a cusp), e.g. when waypoints double back
        raise DegenerateWaypoints(f"{wp.name or 'waypoints'}: path doubles back on itself near "
                                  f"s={s_nodes[int(np.argmin(speed_gain))]:.2f} m")

    margin = A_MARGIN if np.any(cross > 1e-12) else 0.0
    a_plan, v_cruise = limits.a_max * (1.0 - margin), v_des
    for _ in range(30):
        with np.errstate(divide="ignore"):
            curve_cap = np.where(cross > 1e-12, CURVE_SHARE * a_plan * speed_gain / cross, np.inf)
        # |p''| s_dot^2 <= share * a keeps coasting admissible even where p'' has a
        # tangential part (the spline is not arc-length parameterized)
        with np.errstate(divide="ignore"):
            coast_cap = np.where(p2n > 1e-12, CURVE_SHARE * a_plan / p2n, np.inf)
        mvc = np.minimum(np.minimum((v_cruise / speed_gain) ** 2, curve_cap), coast_cap)
        x = _plan(p1s, p2s, ds, mvc, a_plan)
        traj = _assemble(spline, s_nodes, x, ds, wp_index, v_des, limits, wp.name)
        peak_a, peak_v = _peaks(traj)
        a_ok = limits.a_max * (1.0 - 0.5 * margin)
        if peak_a <= a_ok and peak_v <= limits.v_max * (1 + 1e-12):
            return traj
        if peak_a > a_ok:
            a_plan *= a_ok / peak_a * (1.0 - 1e-6)
        if peak_v > limits.v_max:
            v_cruise *= limits.v_max / peak_v * (1.0 - 1e-9)
    raise InfeasibleSpeed(f"could not satisfy limits on {wp.name!r}")


def _assemble(spline, s_nodes, x, ds, wp_index, v_des, limits, name) -> DesiredTrajectory:
    sdot = np.sqrt(np.maximum(x, 0.0))
    denom = sdot[:-1] + sdot[1:]
    if np.any(denom <= 0.0):
        raise InfeasibleSpeed("time law stalls: path cannot be traversed under the limits")
    dt = 2.0 * ds / denom
    t_nodes = np.concatenate([[0.0], np.cumsum(dt)])
    sddot = (x[1:] - x[:-1]) / (2.0 * ds)
    return DesiredTrajectory(
        spline=spline,
        s_nodes=s_nodes,
        t_nodes=t_nodes,
        sdot_nodes=sdot,
        sddot=sddot,
        waypoint_times=t_nodes[wp_index],
        duration=float(t_nodes[-1]),
        v_des=v_des,
        limits=limits,
        name=name,
    )


def _peaks(traj: DesiredTrajectory) -> tuple[float, float]:
    frac = np.linspace(0.0, 1.0, 9)
    t0 = traj.t_nodes[:-1, None]
    span = np.diff(traj.t_nodes)[:, None]
    ts = (t0 + span * frac[None, :]).ravel()
    ts = np.clip(ts, 1e-12, traj.duration - 1e-12)
    _, v, a = traj.eval_many(ts)
    return float(np.max(np.hypot(a[:, 0], a[:, 1]))), float(np.max(np.hypot(v[:, 0], v[:, 1])))


# -- scenario files ----------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    name: str
    waypoints: WaypointList
    default_v_des: float = 1.0
    description: str = ""


def _scenario_dir():
    return resources.files("clbench") / "data" / "scenarios"


def list_scenarios() -> list[str]:
    return sorted(p.name[:-5] for p in _scenario_dir().iterdir() if p.name.endswith(".yaml"))


def load_scenario(name_or_path: str | Path) -> Scenario:
    """Load a scenario by bundled name (``"m1"``) or from a YAML file path."""
    path = Path(name_or_path)
    if path.suffix in (".yaml", ".yml") and path.exists():
        text = path.read_text()
    else:
        res = _scenario_dir() / f"{name_or_path}.yaml"
        if not res.is_file():
            raise ConfigError(f"unknown scenario {name_or_path!r}; have {list_scenarios()}")
        text = res.read_text()
    return scenario_from_dict(yaml.safe_load(text))


def scenario_from_dict(doc: dict) -> Scenario:
    name = str(doc["name"])
    return Scenario(
        name=name,
        waypoints=WaypointList(tuple(tuple(p) for p in doc["waypoints"]), name=name),
        default_v_des=float(doc.get("default_v_des", 1.0)),
        description=str(doc.get("description", "")),
    )


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "name": sc.name,
        "description": sc.description,
        "default_v_des": sc.default_v_des,
        "waypoints": [[round(x, 6), round(y, 6)] for x, y in sc.waypoints.points],
    }


def straight(length: float, name: str = "straight", step: float | None = None) -> WaypointList:
    """Straight path along +x from the origin, optionally with intermediate points."""
    n = 1 if step is None else max(1, math.ceil(length / step))
    xs = np.linspace(0.0, length, n + 1)
    return WaypointList(tuple((float(x), 0.0) for x in xs), name=name)


def waypoints_from_turtle(moves: Sequence[tuple], step: float = 1.0, name: str = "") -> WaypointList:
    """Sample a path described as straight runs and circular turns.

    ``moves`` items are ``("S", length)``, ``("L", degrees, radius)`` or
    ``("R", degrees, radius)``; the path starts at the origin heading +x.
    """
    x = y = th = 0.0
    pts = [(0.0, 0.0)]
    for mv in moves:
        kind = mv[0]
        if kind == "S":
            n = max(1, math.ceil(mv[1] / step))
            for i in range(1, n + 1):
                d = mv[1] * i / n
                pts.append((x + d * math.cos(th), y + d * math.sin(th)))
            x, y = pts[-1]
        elif kind in ("L", "R"):
            sign = 1.0 if kind == "L" else -1.0
            ang = math.radians(mv[1])
            r = mv[2]
            cx, cy = x - sign * r * math.sin(th), y + sign * r * math.cos(th)
            n = max(2, math.ceil(ang * r / step))
            for i in range(1, n + 1):
                phi = th + sign * ang * i / n
                pts.append((cx + sign * r * math.sin(phi), cy - sign * r * math.cos(phi)))
            x, y = pts[-1]
            th += sign * ang
        else:
            raise ValueError(f"unknown move {mv!r}")
    return WaypointList(tuple(pts), name=name)

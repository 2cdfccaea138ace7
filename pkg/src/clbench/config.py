"""YAML configuration files for runs, suites and sweeps.

A config file is a mapping; every key is optional::

    seed: 7
    repeats: 5
    loop_mode: closed
    base:                     # RunConfig fields shared by every run
      warmup: 10.0
      flat_gains: {c_p: 2.0, c_d: 3.0, c_lambda: 1.0, epsilon: 0.01, lambda0: 0.03}
      tracking_gains: {k_x: 1.5, k_y: 2.0, k_theta: 3.0}
      rates: {control: 50, camera: 30}
    run: {scenario: s1, v_des: 1.0, estimator: gf-like, imu: adis16448}
    suite:
      scenarios: [s1, s2, m1, m2, l1, l2]
      speeds: [0.5, 1.0, 1.5]
      estimators: [svo-like, {preset: gf-like, latency: 0.1, name: gf-slow}]
      imus: [adis16448, mpu6000]
    sweep: {axis: latency, values: [0.01, 0.03, 0.06, 0.1]}

Estimators and IMUs may be preset names, YAML file paths or inline mappings.
``resolved`` returns the same structure with every default filled in, which
the CLI echoes into its JSON summary.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from .controller import FlatGains, TrackingGains
from .errors import ConfigError
from .estimator import load_estimator
from .harness import (DEFAULT_ESTIMATORS, DEFAULT_IMUS, DEFAULT_SCENARIOS, DEFAULT_SPEEDS, RunConfig,
                      SWEEP_AXES)
from .sensors import CameraSchedule, load_imu
from .trajectory import TrajectoryLimits
from .vehicle import VehicleLimits

_NESTED = {
    "flat_gains": FlatGains,
    "tracking_gains": TrackingGains,
    "vehicle": VehicleLimits,
    "traj_limits": TrajectoryLimits,
    "camera": CameraSchedule,
}

_TOP = {"seed", "repeats", "loop_mode", "base", "run", "suite", "sweep"}


def _build(cls, doc, what):
    if isinstance(doc, cls):
        return doc
    if not isinstance(doc, dict):
        raise ConfigError(f"{what} must be a mapping")
    known = {f.name for f in fields(cls)}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown {what} fields: {sorted(extra)}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad {what}: {e}") from e


def run_config_from_dict(doc: dict, base: RunConfig | None = None) -> RunConfig:
    """Apply the mapping ``doc`` on top of ``base`` (default: RunConfig())."""
    base = base or RunConfig()
    doc = dict(doc or {})
    kw = {}
    rates = doc.pop("rates", None)
    if rates is not None:
        rates = dict(rates)
        if "control" in rates:
            kw["control_rate"] = float(rates.pop("control"))
        if "camera" in rates:
            doc.setdefault("camera", {})
            doc["camera"] = {**asdict(base.camera), **doc["camera"], "rate": float(rates.pop("camera"))}
        if "imu" in rates:
            doc["imu_rate"] = float(rates.pop("imu"))
        if rates:
            raise ConfigError(f"unknown rates: {sorted(rates)}")
    imu_rate = doc.pop("imu_rate", None)
    known = {f.name for f in fields(RunConfig)}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown run fields: {sorted(extra)}")
    for k, v in doc.items():
        if k in _NESTED:
            cur = asdict(getattr(base, k))
            kw[k] = _build(_NESTED[k], {**cur, **v} if isinstance(v, dict) else v, k)
        elif k == "estimator":
            kw[k] = load_estimator(v)
        elif k == "imu":
            kw[k] = load_imu(v)
        elif k == "seed":
            kw[k] = _seed(v)
        else:
            kw[k] = v
    try:
        cfg = replace(base, **kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    if imu_rate is not None:
        cfg = replace(cfg, imu=replace(cfg.imu, rate=imu_rate))
    return cfg


def _seed(v) -> int:
    try:
        s = int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {v!r}") from None
    if not 0 <= s < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return s


@dataclass
class BenchConfig:
    base: RunConfig = field(default_factory=RunConfig)
    repeats: int = 5
    scenarios: tuple = DEFAULT_SCENARIOS
    speeds: tuple = DEFAULT_SPEEDS
    estimators: tuple = DEFAULT_ESTIMATORS
    imus: tuple = DEFAULT_IMUS
    sweep_axis: str = "latency"
    sweep_values: tuple = (0.01, 0.03, 0.06, 0.1)
    source: str | None = None

    def resolved(self) -> dict:
        """Every effective setting, defaults included."""
        return {
            "source": self.source,
            "repeats": self.repeats,
            "run": self.base.to_dict(),
            "suite": {
                "scenarios": list(self.scenarios),
                "speeds": list(self.speeds),
                "estimators": [load_estimator(e).to_dict() for e in self.estimators],
                "imus": [asdict(load_imu(i)) for i in self.imus],
            },
            "sweep": {"axis": self.sweep_axis, "values": list(self.sweep_values)},
        }


def from_dict(doc: dict | None, source: str | None = None) -> BenchConfig:
    doc = dict(doc or {})
    extra = set(doc) - _TOP
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    base_doc = dict(doc.get("base") or {})
    for k in ("seed", "loop_mode"):
        if k in doc:
            base_doc[k] = doc[k]
    base = run_config_from_dict(base_doc)
    if doc.get("run"):
        base = run_config_from_dict(doc["run"], base)
    out = BenchConfig(base=base, source=source)
    if "repeats" in doc:
        out.repeats = _repeats(doc["repeats"])
    suite = dict(doc.get("suite") or {})
    for k in ("scenarios", "speeds", "estimators", "imus"):
        if k in suite:
            v = suite.pop(k)
            if not isinstance(v, list) or not v:
                raise ConfigError(f"suite.{k} must be a non-empty list")
            setattr(out, k, tuple(float(x) for x in v) if k == "speeds" else tuple(v))
    if suite:
        raise ConfigError(f"unknown suite keys: {sorted(suite)}")
    sw = dict(doc.get("sweep") or {})
    if "axis" in sw:
        out.sweep_axis = sw.pop("axis")
        if out.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    if "values" in sw:
        out.sweep_values = tuple(float(v) for v in sw.pop("values"))
    if sw:
        raise ConfigError(f"unknown sweep keys: {sorted(sw)}")
    # resolve presets early so typos fail before any simulation
    for e in out.estimators:
        load_estimator(e)
    for i in out.imus:
        load_imu(i)
    return out


def _repeats(v) -> int:
    n = int(v)
    if n < 1:
        raise ConfigError("repeats must be >= 1")
    return n


def load_config(path) -> BenchConfig:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"bad YAML in {path}: {e}") from e
    if doc is not None and not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return from_dict(doc, source=str(path))

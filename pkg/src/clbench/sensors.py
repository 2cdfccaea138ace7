"""Planar IMU and camera trigger models.

The IMU measures body-frame specific force ``(a_x, a_y)`` and yaw rate.  For
a unicycle whose velocity is held constant over each tick, the reading over
tick ``k`` is ``a_x = (nu_k - nu_{k-1}) / dt``, ``a_y = nu_k * omega_k`` and
``gyro = omega_k``, plus bias and white noise.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError


@dataclass(frozen=True)
class ImuModel:
    name: str = "custom"
    accel_noise_density: float = 0.0
    gyro_noise_density: float = 0.0
    accel_bias_rw: float = 0.0
    gyro_bias_rw: float = 0.0
    rate: float = 200.0
    accel_turn_on_sigma: float = 0.0
    gyro_turn_on_sigma: float = 0.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ConfigError("IMU rate must be positive")
        for k, v in asdict(self).items():
            if k not in ("name", "rate") and v < 0:
                raise ConfigError(f"IMU {k} must be >= 0")

    @property
    def accel_sigma(self) -> float:
        return self.accel_noise_density * math.sqrt(self.rate)

    @property
    def gyro_sigma(self) -> float:
        return self.gyro_noise_density * math.sqrt(self.rate)


@dataclass(frozen=True)
class ImuReading:
    t: float
    accel: tuple[float, float]
    gyro: float
    dt: float = 0.0  # length of the interval the reading covers


@dataclass(frozen=True)
class ImuBias:
    accel_x: float = 0.0
    accel_y: float = 0.0
    gyro: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.accel_x, self.accel_y, self.gyro])


@dataclass(frozen=True)
class CameraSchedule:
    rate: float = 30.0
    first_frame: float = 0.0
    baseline: float = 0.11  # stereo baseline in m; recorded only

    def __post_init__(self):
        if self.rate <= 0:
            raise ConfigError("camera rate must be positive")


def _imu_dir():
    return resources.files("clbench") / "data" / "imu"


def list_imus() -> list[str]:
    return sorted(p.name[:-5] for p in _imu_dir().iterdir() if p.name.endswith(".yaml"))


def imu_from_dict(doc: dict) -> ImuModel:
    known = set(ImuModel.__dataclass_fields__)
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown IMU fields: {sorted(extra)}")
    return ImuModel(**{k: (v if k == "name" else float(v)) for k, v in doc.items()})


def load_imu(name_or_path) -> ImuModel:
    if isinstance(name_or_path, ImuModel):
        return name_or_path
    if isinstance(name_or_path, dict):
        return imu_from_dict(name_or_path)
    path = Path(str(name_or_path))
    if path.suffix in (".yaml", ".yml") and path.exists():
        return imu_from_dict(yaml.safe_load(path.read_text()))
    res = _imu_dir() / f"{name_or_path}.yaml"
    if not res.is_file():
        raise ConfigError(f"unknown IMU preset {name_or_path!r}; have {list_imus()}")
    return imu_from_dict(yaml.safe_load(res.read_text()))


def true_specific_force(prev, nxt) -> tuple[float, float, float]:
    """Noise-free ``(a_x, a_y, gyro)`` over the tick from ``prev`` to ``nxt`` (VehicleStates)."""
    dt = nxt.t - prev.t
    nu, om = nxt.vel.nu, nxt.vel.omega
    return (nu - prev.vel.nu) / dt, nu * om, om


def initial_bias(model: ImuModel, rng: np.random.Generator) -> ImuBias:
    z = rng.standard_normal(3)
    return ImuBias(z[0] * model.accel_turn_on_sigma, z[1] * model.accel_turn_on_sigma,
                   z[2] * model.gyro_turn_on_sigma)


def imu_sample(prev, nxt, model: ImuModel, bias: ImuBias, rng: np.random.Generator):
    """One reading over the tick ``prev -> nxt`` and the bias for the next tick.

    Draws six standard normals per call: three for white noise, then three
    for the bias random walk.
    """
    dt = nxt.t - prev.t
    ax, ay, g = true_specific_force(prev, nxt)
    z = rng.standard_normal(6)
    reading = ImuReading(
        nxt.t,
        (ax + bias.accel_x + z[0] * model.accel_sigma, ay + bias.accel_y + z[1] * model.accel_sigma),
        g + bias.gyro + z[2] * model.gyro_sigma,
        dt,
    )
    sa = model.accel_bias_rw * math.sqrt(dt)
    sg = model.gyro_bias_rw * math.sqrt(dt)
    new_bias = ImuBias(bias.accel_x + z[3] * sa, bias.accel_y + z[4] * sa, bias.gyro + z[5] * sg)
    return reading, new_bias


def imu_error_stream(model: ImuModel, n: int, dt: float, rng: np.random.Generator,
                     bias0: ImuBias | None = None) -> np.ndarray:
    """Additive reading errors (bias + white noise) for ``n`` consecutive ticks.

    Consumes ``rng`` exactly like ``n`` successive :func:`imu_sample` calls,
    so both paths see identical noise.  Columns are ``(a_x, a_y, gyro)``.
    """
    bias0 = bias0 or ImuBias()
    z = rng.standard_normal((n, 6))
    white = z[:, :3] * np.array([model.accel_sigma, model.accel_sigma, model.gyro_sigma])
    steps = z[:, 3:] * np.array([model.accel_bias_rw, model.accel_bias_rw, model.gyro_bias_rw]) * math.sqrt(dt)
    # sequential accumulation, matching the scalar update order
    walk = np.cumsum(np.vstack([bias0.as_array(), steps[:-1]]), axis=0)
    return walk + white


def frame_times(sched: CameraSchedule, horizon: float) -> np.ndarray:
    """Capture times ``first_frame + j / rate`` up to and including ``horizon``."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    n = int(math.floor((horizon - sched.first_frame) * sched.rate + 1e-9))
    if n < 0:
        return np.empty(0)
    return sched.first_frame + np.arange(n + 1) / sched.rate

"""
Experiment configuration.

The file format is INI as read by :mod:`configparser`: ``[section]`` headers
followed by ``key = value`` lines, ``#`` or ``;`` comments. Vectors are written
either as comma-separated numbers (``0.01, 0.02, 0.03``) or as a JSON list.
Booleans accept ``true/false``, ``yes/no``, ``on/off`` and ``1/0``. Unknown
sections or keys are rejected so that typos fail loudly. Every key is optional;
omitted keys take the defaults of the dataclasses below.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .geometry import DEFAULT_PITCH_DEG, BeamGeometry
from .mogpr import OptimizerConfig
from .sim import DvlErrorSpec, ImuErrorSpec, Pattern, TrajectorySpec


def _floats(text: str) -> np.ndarray:
    text = text.strip()
    try:
        value = json.loads(text) if text.startswith("[") else [float(x) for x in text.split(",") if x.strip()]
        arr = np.asarray(value, dtype=float).reshape(-1)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"cannot parse numeric list {text!r}") from exc
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"non-finite value in {text!r}")
    return arr


@dataclass(frozen=True)
class SimConfig:
    pattern: str = "mixed"
    duration_s: float = 600.0
    speed_mps: float = 1.5
    turn_rate_dps: float = 3.0
    heading_deg: float = 0.0

    def trajectory(self, seed: int, **overrides) -> TrajectorySpec:
        spec = TrajectorySpec(
            pattern=self.pattern,
            duration=self.duration_s,
            cruise_speed=self.speed_mps,
            turn_rate=float(np.radians(self.turn_rate_dps)),
            heading=float(np.radians(self.heading_deg)),
            seed=seed,
        )
        return replace(spec, **overrides) if overrides else spec


@dataclass(frozen=True)
class DvlErrorConfig:
    bias_mps: tuple = (0.0,)
    scale: tuple = (0.0,)
    noise_std_mps: float = 0.02

    def spec(self, bias=None) -> DvlErrorSpec:
        b = np.asarray(self.bias_mps if bias is None else bias, float)
        s = np.asarray(self.scale, float)
        b = np.full(4, b.item()) if b.size == 1 else b
        s = np.full(3, s.item()) if s.size == 1 else s
        return DvlErrorSpec(b, s, self.noise_std_mps)


@dataclass(frozen=True)
class ImuErrorConfig:
    accel_bias: tuple = (0.005, -0.004, 0.006)
    gyro_bias: tuple = (2e-5, -3e-5, 1e-5)
    accel_noise_std: float = 0.005
    gyro_noise_std: float = 1e-4
    accel_bias_walk: float = 1e-9
    gyro_bias_walk: float = 1e-13

    def spec(self) -> ImuErrorSpec:
        return ImuErrorSpec(
            np.asarray(self.accel_bias, float),
            np.asarray(self.gyro_bias, float),
            self.accel_noise_std,
            self.gyro_noise_std,
            self.accel_bias_walk,
            self.gyro_bias_walk,
        )


@dataclass(frozen=True)
class GeometryConfig:
    pitch_deg: float = DEFAULT_PITCH_DEG
    yaw_deg: tuple = ()

    def geometry(self) -> BeamGeometry:
        return BeamGeometry.from_degrees(self.pitch_deg, list(self.yaw_deg) or None)


@dataclass(frozen=True)
class GprConfig:
    max_points: int = 2000
    iterations: int = 50
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    init_noise_std: float = 0.02
    seed: int = 0

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(self.learning_rate, self.beta1, self.beta2, self.iterations)


@dataclass(frozen=True)
class EkfSection:
    adaptive_r: bool = False
    constant_r_std_mps: float = 0.02
    joseph_form: bool = True
    init_velocity_std: float = 0.1
    init_attitude_std_deg: float = 1.0
    init_accel_bias_std: float = 0.01
    init_gyro_bias_std: float = 5e-5
    perturb_initial: bool = True


@dataclass(frozen=True)
class SweepConfig:
    biases: tuple = (0.001, 0.003, 0.005, 0.007, 0.009, 0.011)
    train_trajectories: int = 11
    test_trajectories: int = 2
    train_pattern: str = "mixed"
    train_speed_min: float = 1.0
    train_speed_max: float = 2.0
    train_biases: tuple = ()  # empty: train on the sweep levels


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "results"
    log_rate_hz: float = 10.0
    skip_seconds: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    sim: SimConfig = field(default_factory=SimConfig)
    dvl_errors: DvlErrorConfig = field(default_factory=DvlErrorConfig)
    imu_errors: ImuErrorConfig = field(default_factory=ImuErrorConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    gpr: GprConfig = field(default_factory=GprConfig)
    ekf: EkfSection = field(default_factory=EkfSection)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        validate(self)


_SECTIONS = {
    "experiment": None,
    "sim": SimConfig,
    "dvl_errors": DvlErrorConfig,
    "imu_errors": ImuErrorConfig,
    "geometry": GeometryConfig,
    "gpr": GprConfig,
    "ekf": EkfSection,
    "sweep": SweepConfig,
    "output": OutputConfig,
}


def _convert(parser, section, key, default):
    raw = parser.get(section, key)
    try:
        if isinstance(default, bool):
            return parser.getboolean(section, key)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(x) for x in _floats(raw))
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def _section(parser, name, cls):
    default = cls()
    known = {f.name for f in fields(cls)}
    values = {}
    for key in parser.options(name):
        if key not in known:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        values[key] = _convert(parser, name, key, getattr(default, key))
    return cls(**values)


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    kwargs = {}
    output_dir = None
    for name in parser.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        if name != "experiment":
            kwargs[name] = _section(parser, name, _SECTIONS[name])
            continue
        for key in parser.options(name):
            if key == "seed":
                kwargs["seed"] = _convert(parser, name, key, 0)
            elif key == "output_dir":
                output_dir = parser.get(name, key).strip()
            else:
                raise ConfigError(f"[experiment] unknown key {key!r}")
    if output_dir is not None:
        kwargs["output"] = replace(kwargs.get("output", OutputConfig()), dir=output_dir)
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def validate(cfg: ExperimentConfig) -> None:
    """Raise ConfigError on values that would only fail deep inside a run."""
    try:
        Pattern(cfg.sim.pattern)
        Pattern(cfg.sweep.train_pattern)
    except ValueError as exc:
        raise ConfigError(f"unsupported trajectory pattern: {exc}") from None
    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative")
    if not cfg.sim.duration_s > 0 or not cfg.sim.speed_mps > 0:
        raise ConfigError("[sim] duration_s and speed_mps must be positive")
    b = np.asarray(cfg.sweep.biases, float)
    if b.size == 0 or np.any(b < 0) or np.any(np.diff(b) <= 0):
        raise ConfigError("[sweep] biases must be non-negative and strictly increasing")
    if np.any(np.asarray(cfg.sweep.train_biases, float) < 0):
        raise ConfigError("[sweep] train_biases must be non-negative")
    if cfg.sweep.train_trajectories < 1 or cfg.sweep.test_trajectories < 1:
        raise ConfigError("[sweep] need at least one training and one test trajectory")
    if not 0 < cfg.sweep.train_speed_min <= cfg.sweep.train_speed_max:
        raise ConfigError("[sweep] train speed range must be positive and ordered")
    if np.asarray(cfg.dvl_errors.bias_mps).size not in (1, 4):
        raise ConfigError("[dvl_errors] bias_mps must be a scalar or four values")
    if np.asarray(cfg.dvl_errors.scale).size not in (1, 3):
        raise ConfigError("[dvl_errors] scale must be a scalar or three values")
    if cfg.dvl_errors.noise_std_mps < 0:
        raise ConfigError("[dvl_errors] noise_std_mps must be non-negative")
    if len(cfg.imu_errors.accel_bias) != 3 or len(cfg.imu_errors.gyro_bias) != 3:
        raise ConfigError("[imu_errors] biases need three components")
    if cfg.gpr.max_points < 2:
        raise ConfigError("[gpr] max_points must be at least 2")
    if not cfg.ekf.constant_r_std_mps > 0:
        raise ConfigError("[ekf] constant_r_std_mps must be positive")
    if not cfg.output.log_rate_hz > 0 or cfg.output.skip_seconds < 0:
        raise ConfigError("[output] log_rate_hz must be positive and skip_seconds non-negative")
    try:
        cfg.geometry.geometry()
        cfg.gpr.optimizer()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

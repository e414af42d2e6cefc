"""
Synthetic AUV missions with exact ground truth.

Motion is described analytically: Euler angles and body-frame velocity are sums
of cosine-blended steps and sinusoids, so angular rate and specific force are
closed-form derivatives rather than numerically differentiated. Position is
integrated from navigation-frame velocity with the trapezoidal rule.

Navigation frame is local NED with constant gravity; Earth rotation and transport
rate are ignored. The DVL frame coincides with the body frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .geometry import BeamGeometry, build_transform
from .rotations import dcm_from_quat_batch, quat_from_euler

GRAVITY = 9.80665
IMU_RATE = 100
DVL_RATE = 1
SUPPORTED_RATES = (DVL_RATE, IMU_RATE)

_TRANSITION_S = 10.0  # duration of a blended speed / pitch / turn-rate change


class Pattern(str, Enum):
    STRAIGHT = "straight"
    TURN = "turn"
    LAWNMOWER = "lawnmower"
    MIXED = "mixed"


@dataclass(frozen=True)
class TrajectorySpec:
    """
    Mission description.

    ``depth_profile`` is a sequence of ``(time_s, depth_m)`` waypoints; the
    vehicle pitches to follow the piecewise-linear depth with blended corners.
    For the ``mixed`` pattern an empty profile is replaced by a random one.
    """

    pattern: Pattern = Pattern.STRAIGHT
    duration: float = 600.0
    cruise_speed: float = 1.5
    depth_profile: tuple[tuple[float, float], ...] = ()
    turn_rate: float = float(np.radians(3.0))
    heading: float = 0.0
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "pattern", Pattern(self.pattern))
        except ValueError:
            from .errors import ConfigError

            raise ConfigError(f"unsupported trajectory pattern {self.pattern!r}") from None
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.cruise_speed > 0:
            raise ValueError("cruise_speed must be positive")
        object.__setattr__(
            self, "depth_profile", tuple((float(t), float(d)) for t, d in self.depth_profile)
        )


@dataclass(frozen=True)
class GroundTruthSample:
    time: float
    position: np.ndarray
    velocity_n: np.ndarray
    attitude: np.ndarray
    angular_rate_b: np.ndarray
    specific_force_b: np.ndarray


@dataclass(frozen=True)
class GroundTruth:
    """Column-oriented ground truth; ``truth[k]`` gives a :class:`GroundTruthSample`."""

    time: np.ndarray
    position: np.ndarray
    velocity_n: np.ndarray
    attitude: np.ndarray
    angular_rate_b: np.ndarray
    specific_force_b: np.ndarray

    def __len__(self):
        return len(self.time)

    def __getitem__(self, k) -> GroundTruthSample:
        return GroundTruthSample(
            float(self.time[k]),
            self.position[k],
            self.velocity_n[k],
            self.attitude[k],
            self.angular_rate_b[k],
            self.specific_force_b[k],
        )

    @property
    def velocity_b(self) -> np.ndarray:
        """Body (and DVL) frame velocity."""
        C = dcm_from_quat_batch(self.attitude)
        return np.einsum("kji,kj->ki", C, self.velocity_n)

    def decimate(self, step: int) -> "GroundTruth":
        s = slice(None, None, step)
        return GroundTruth(
            self.time[s],
            self.position[s],
            self.velocity_n[s],
            self.attitude[s],
            self.angular_rate_b[s],
            self.specific_force_b[s],
        )


@dataclass(frozen=True)
class ImuErrorSpec:
    """
    Initial biases, per-sample white noise std and bias random-walk PSDs.

    A walk PSD ``q`` adds ``sqrt(q * dt)`` standard-normal increments per sample.
    """

    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_noise_std: float = 0.0
    gyro_noise_std: float = 0.0
    accel_bias_walk: float = 0.0
    gyro_bias_walk: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "accel_bias", _vector(self.accel_bias, 3, "accel_bias"))
        object.__setattr__(self, "gyro_bias", _vector(self.gyro_bias, 3, "gyro_bias"))
        if self.accel_noise_std < 0 or self.gyro_noise_std < 0:
            raise ValueError("noise standard deviations must be non-negative")
        if self.accel_bias_walk < 0 or self.gyro_bias_walk < 0:
            raise ValueError("bias walk PSDs must be non-negative")


@dataclass(frozen=True)
class DvlErrorSpec:
    """Beam-space bias (4), DVL-frame scale factor (3) and per-beam white noise std."""

    beam_bias: np.ndarray = field(default_factory=lambda: np.zeros(4))
    scale_factor: np.ndarray = field(default_factory=lambda: np.zeros(3))
    noise_std: float = 0.0

    def __post_init__(self):
        bias = np.asarray(self.beam_bias, dtype=float)
        if bias.ndim == 0:
            bias = np.full(4, float(bias))
        object.__setattr__(self, "beam_bias", _vector(bias, 4, "beam_bias"))
        object.__setattr__(self, "scale_factor", _vector(self.scale_factor, 3, "scale_factor"))
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")


@dataclass(frozen=True)
class ImuData:
    time: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray

    def __len__(self):
        return len(self.time)


@dataclass(frozen=True)
class BeamData:
    time: np.ndarray
    beams: np.ndarray
    truth_velocity_dvl: np.ndarray

    def __len__(self):
        return len(self.time)


def _vector(value, size, name):
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (size,):
        raise ValueError(f"{name} must have {size} elements, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


# --------------------------------------------------------------------------
# analytic motion primitives


class _Channel:
    """Scalar signal built from blended steps and sinusoids.

    ``value``, ``rate`` and ``integral`` are exact for every component.
    """

    def __init__(self, base=0.0):
        self.base = float(base)
        self.steps: list[tuple[float, float, float]] = []  # (start, duration, delta)
        self.waves: list[tuple[float, float, float]] = []  # (amplitude, omega, phase)

    def step(self, start, delta, duration=_TRANSITION_S):
        self.steps.append((float(start), float(duration), float(delta)))
        return self

    def wave(self, amplitude, period, phase=0.0):
        self.waves.append((float(amplitude), 2.0 * np.pi / float(period), float(phase)))
        return self

    def value(self, t):
        out = np.full_like(t, self.base)
        for t0, d, delta in self.steps:
            tau = np.clip((t - t0) / d, 0.0, 1.0)
            out += delta * 0.5 * (1.0 - np.cos(np.pi * tau))
        for a, w, ph in self.waves:
            out += a * np.sin(w * t + ph)
        return out

    def rate(self, t):
        out = np.zeros_like(t)
        for t0, d, delta in self.steps:
            tau = (t - t0) / d
            inside = (tau > 0.0) & (tau < 1.0)
            out += np.where(inside, delta * 0.5 * np.pi / d * np.sin(np.pi * tau), 0.0)
        for a, w, ph in self.waves:
            out += a * w * np.cos(w * t + ph)
        return out

    def integral(self, t):
        """Integral from 0 to t."""
        out = self.base * t
        for t0, d, delta in self.steps:
            tau = np.clip((t - t0) / d, 0.0, 1.0)
            ramp = d * (0.5 * tau - np.sin(np.pi * tau) / (2.0 * np.pi))
            after = np.maximum(t - t0 - d, 0.0)
            out += delta * (ramp + after)
        for a, w, ph in self.waves:
            out += a / w * (np.cos(ph) - np.cos(w * t + ph))
        return out


@dataclass
class _Motion:
    yaw_rate: _Channel
    pitch: _Channel
    roll: _Channel
    surge: _Channel
    heave: _Channel
    sideslip_gain: float  # sway = -gain * yaw_rate * surge
    heading: float
    depth0: float


def _pitch_channel(profile, speed, duration) -> tuple[_Channel, float]:
    """Pitch steps that track piecewise-linear depth waypoints at a given speed."""
    pitch = _Channel(0.0)
    if not profile:
        return pitch, 0.0
    pts = sorted(profile)
    depth0 = pts[0][1]
    if pts[0][0] > 0.0:
        pts.insert(0, (0.0, depth0))
    current = 0.0
    for (t0, d0), (t1, d1) in zip(pts[:-1], pts[1:]):
        if t1 <= t0:
            raise ValueError("depth profile times must be strictly increasing")
        sink = (d1 - d0) / (t1 - t0)
        target = -np.arcsin(np.clip(sink / speed, -0.5, 0.5))
        start = max(t0 - 0.5 * _TRANSITION_S, 0.0)
        if target != current:
            pitch.step(start, target - current)
            current = target
    if pts[-1][0] < duration and current != 0.0:
        pitch.step(max(pts[-1][0] - 0.5 * _TRANSITION_S, 0.0), -current)
    return pitch, depth0


def _build_motion(spec: TrajectorySpec) -> _Motion:
    rng = np.random.default_rng(spec.seed)
    T = spec.duration
    U = spec.cruise_speed
    yaw_rate = _Channel()
    roll = _Channel()
    surge = _Channel(U)
    heave = _Channel()
    gain = 0.0
    profile = spec.depth_profile

    if spec.pattern is Pattern.TURN:
        yaw_rate = _Channel(spec.turn_rate)
    elif spec.pattern is Pattern.LAWNMOWER:
        # straight legs joined by alternating 180 degree turns
        turn_time = np.pi / abs(spec.turn_rate)
        leg = max(T / 6.0, 2.0 * _TRANSITION_S)
        t, sign = leg, 1.0
        while t + turn_time + _TRANSITION_S < T:
            rate = sign * abs(spec.turn_rate)
            # blended on/off steps of equal area to a sharp turn of length turn_time
            yaw_rate.step(t, rate).step(t + turn_time, -rate)
            t += turn_time + _TRANSITION_S + leg
            sign = -sign
        roll.wave(np.radians(0.5), 17.0, rng.uniform(0, 2 * np.pi))
        heave.wave(0.01, 23.0, rng.uniform(0, 2 * np.pi))
        gain = 0.4
    elif spec.pattern is Pattern.MIXED:
        t = rng.uniform(20.0, 60.0)
        while t + 2 * _TRANSITION_S < T:
            span = rng.uniform(15.0, 60.0)
            rate = rng.choice([-1.0, 1.0]) * abs(spec.turn_rate) * rng.uniform(0.5, 1.0)
            yaw_rate.step(t, rate).step(t + span, -rate)
            t += span + _TRANSITION_S + rng.uniform(30.0, 90.0)
        t = rng.uniform(40.0, 120.0)
        level = U
        while t + _TRANSITION_S < T:
            new = np.clip(level + rng.uniform(-0.3, 0.3), 0.7 * U, 1.3 * U)
            surge.step(t, new - level, duration=20.0)
            level = new
            t += rng.uniform(60.0, 180.0)
        roll.wave(np.radians(rng.uniform(0.3, 1.0)), rng.uniform(10.0, 20.0), rng.uniform(0, 2 * np.pi))
        heave.wave(rng.uniform(0.005, 0.015), rng.uniform(15.0, 30.0), rng.uniform(0, 2 * np.pi))
        gain = rng.uniform(0.3, 0.6)
        if not profile:
            depth = rng.uniform(10.0, 40.0)
            pts = [(0.0, depth)]
            tk = rng.uniform(30.0, 90.0)
            while True:
                change = rng.uniform(60.0, 150.0)
                if tk + change >= T:
                    break
                depth = float(np.clip(depth + rng.uniform(-8.0, 8.0), 5.0, 60.0))
                tk += change
                pts.append((tk, depth))
                tk += rng.uniform(30.0, 90.0)
                if tk >= T:
                    break
                pts.append((tk, depth))
            profile = tuple(pts)

    pitch, depth0 = _pitch_channel(profile, U, T)
    return _Motion(yaw_rate, pitch, roll, surge, heave, gain, spec.heading, depth0)


def _evaluate(motion: _Motion, t: np.ndarray):
    r = motion.yaw_rate.value(t)
    r_dot = motion.yaw_rate.rate(t)
    yaw = motion.heading + motion.yaw_rate.integral(t)
    pitch, pitch_dot = motion.pitch.value(t), motion.pitch.rate(t)
    roll, roll_dot = motion.roll.value(t), motion.roll.rate(t)

    u, u_dot = motion.surge.value(t), motion.surge.rate(t)
    v = -motion.sideslip_gain * r * u
    v_dot = -motion.sideslip_gain * (r_dot * u + r * u_dot)
    w, w_dot = motion.heave.value(t), motion.heave.rate(t)
    vel_b = np.column_stack([u, v, w])
    acc_b = np.column_stack([u_dot, v_dot, w_dot])

    q = quat_from_euler(roll, pitch, yaw)
    C = dcm_from_quat_batch(q)

    sr, cr = np.sin(roll), np.cos(roll)
    sp, cp = np.sin(pitch), np.cos(pitch)
    omega = np.column_stack(
        [
            roll_dot - r * sp,
            pitch_dot * cr + r * sr * cp,
            -pitch_dot * sr + r * cr * cp,
        ]
    )
    g_n = np.array([0.0, 0.0, GRAVITY])
    g_b = np.einsum("kji,j->ki", C, g_n)
    f_b = acc_b + np.cross(omega, vel_b) - g_b
    vel_n = np.einsum("kij,kj->ki", C, vel_b)
    return q, vel_n, omega, f_b


def generate_trajectory(spec: TrajectorySpec, rate: int = IMU_RATE) -> GroundTruth:
    """
    Sample a mission at ``rate`` Hz (1 or 100).

    The 1 Hz output is an exact decimation of the 100 Hz output, so both streams
    share epochs and the same integrated position.
    """
    if rate not in SUPPORTED_RATES:
        raise ValueError(f"rate must be one of {SUPPORTED_RATES}, got {rate!r}")
    n = int(np.floor(spec.duration * IMU_RATE + 1e-9)) + 1
    t = np.arange(n) / IMU_RATE
    motion = _build_motion(spec)
    q, vel_n, omega, f_b = _evaluate(motion, t)
    pos = cumulative_trapezoid(vel_n, t, axis=0, initial=0.0)
    pos[:, 2] += motion.depth0
    truth = GroundTruth(t, pos, vel_n, q, omega, f_b)
    if rate == IMU_RATE:
        return truth
    return truth.decimate(IMU_RATE // rate)


def synthesize_imu(truth: GroundTruth, errors: ImuErrorSpec, seed: int) -> ImuData:
    """Accelerometer and gyro readings: truth + bias + white noise."""
    accel, gyro = _imu_errors(truth, errors, seed)
    return ImuData(truth.time.copy(), truth.specific_force_b + accel, truth.angular_rate_b + gyro)


def imu_bias_history(truth: GroundTruth, errors: ImuErrorSpec, seed: int):
    """The (n, 3) accelerometer and gyro bias sequences used by ``synthesize_imu``."""
    return _imu_errors(truth, errors, seed, bias_only=True)


def _imu_errors(truth, errors, seed, bias_only=False):
    rng = np.random.default_rng(seed)
    n = len(truth)
    accel_noise = rng.standard_normal((n, 3)) * errors.accel_noise_std
    gyro_noise = rng.standard_normal((n, 3)) * errors.gyro_noise_std
    accel_bias = np.broadcast_to(errors.accel_bias, (n, 3))
    gyro_bias = np.broadcast_to(errors.gyro_bias, (n, 3))
    # walk increments are drawn only when enabled so walk-free streams do not change
    dt = np.diff(truth.time, prepend=truth.time[0])[:, None]
    if errors.accel_bias_walk > 0:
        steps = rng.standard_normal((n, 3)) * np.sqrt(errors.accel_bias_walk * dt)
        accel_bias = accel_bias + np.cumsum(steps, axis=0)
    if errors.gyro_bias_walk > 0:
        steps = rng.standard_normal((n, 3)) * np.sqrt(errors.gyro_bias_walk * dt)
        gyro_bias = gyro_bias + np.cumsum(steps, axis=0)
    if bias_only:
        return np.array(accel_bias), np.array(gyro_bias)
    return accel_bias + accel_noise, gyro_bias + gyro_noise


def synthesize_beams(
    truth: GroundTruth, geometry: BeamGeometry, errors: DvlErrorSpec, seed: int
) -> BeamData:
    """
    Corrupted along-beam velocities ``T[v * (1 + s)] + b + n``.

    ``v`` is the DVL-frame velocity, the scale factor acts element-wise before
    the beam transformation and the noise is i.i.d. per beam.
    """
    rng = np.random.default_rng(seed)
    T = build_transform(geometry)
    v_dvl = truth.velocity_b
    noise = rng.standard_normal((len(truth), 4)) * errors.noise_std
    beams = (v_dvl * (1.0 + errors.scale_factor)) @ T.T + errors.beam_bias + noise
    return BeamData(truth.time.copy(), beams, v_dvl)

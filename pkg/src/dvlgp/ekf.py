"""
Strapdown INS and loosely coupled 12-state error-state EKF.

Error-state convention (closed loop, reset to zero after each injection):

* ``dv = v_est - v_true`` (navigation frame)
* ``eps``: misalignment with ``C_est = (I - [eps x]) C_true``
* ``db_a = b_a,true - b_a,est`` and ``db_g = b_g,true - b_g,est``

With these signs the linearized dynamics are

    d(dv)/dt  =  [f_n x] eps + C db_a + C n_a
    d(eps)/dt = -C db_g - C n_g

and a DVL velocity ``z = C_est v_dvl`` enters through
``dz = v_est - z = dv - [v_est x] eps - C n_dvl``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FilterFault, InputError
from ._fastprop import propagate_segment
from .ls import VelocityEstimate
from .rotations import (
    euler_from_quat,
    quat_from_rotvec,
    quat_multiply,
    quat_normalize,
    quat_to_dcm,
    skew,
)
from .sim import GRAVITY, IMU_RATE, GroundTruth, ImuData, ImuErrorSpec

log = logging.getLogger(__name__)

N_STATES = 12
VEL, ATT, BA, BG = slice(0, 3), slice(3, 6), slice(6, 9), slice(9, 12)
GRAVITY_N = np.array([0.0, 0.0, GRAVITY])
_I3 = np.eye(3)
_I12 = np.eye(N_STATES)


@dataclass(frozen=True)
class EkfConfig:
    """
    Filter tuning.

    Noise standard deviations are per-sample values at the IMU rate; the
    corresponding PSDs are ``std**2 / rate``. Bias walks are PSDs.
    """

    adaptive_r: bool = False
    constant_r_std: float = 0.02
    joseph_form: bool = True
    init_velocity_std: float = 0.1
    init_attitude_std: float = float(np.radians(1.0))
    init_accel_bias_std: float = 0.01
    init_gyro_bias_std: float = 5e-5
    accel_noise_std: float = 0.005
    gyro_noise_std: float = 1e-4
    accel_bias_walk: float = 1e-9
    gyro_bias_walk: float = 1e-13
    imu_rate: float = IMU_RATE
    perturb_initial: bool = True
    seed: int = 0

    def with_imu_errors(self, spec: ImuErrorSpec) -> "EkfConfig":
        """Match the process noise to the IMU errors actually injected."""
        return replace(
            self,
            accel_noise_std=spec.accel_noise_std,
            gyro_noise_std=spec.gyro_noise_std,
            accel_bias_walk=spec.accel_bias_walk,
            gyro_bias_walk=spec.gyro_bias_walk,
        )

    def initial_covariance(self) -> np.ndarray:
        std = np.repeat(
            [
                self.init_velocity_std,
                self.init_attitude_std,
                self.init_accel_bias_std,
                self.init_gyro_bias_std,
            ],
            3,
        )
        return np.diag(std**2)

    def continuous_noise(self) -> np.ndarray:
        dt = 1.0 / self.imu_rate
        psd = np.repeat(
            [
                self.accel_noise_std**2 * dt,
                self.gyro_noise_std**2 * dt,
                self.accel_bias_walk,
                self.gyro_bias_walk,
            ],
            3,
        )
        return np.diag(psd)


@dataclass
class NavState:
    time: float
    position: np.ndarray
    velocity_n: np.ndarray
    attitude: np.ndarray
    accel_bias_est: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias_est: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self) -> "NavState":
        return NavState(
            self.time,
            self.position.copy(),
            self.velocity_n.copy(),
            self.attitude.copy(),
            self.accel_bias_est.copy(),
            self.gyro_bias_est.copy(),
        )


@dataclass
class FilterState:
    P: np.ndarray
    Q: np.ndarray
    last_update_time: float = float("nan")


@dataclass(frozen=True)
class UpdateDiagnostics:
    innovation: np.ndarray
    R: np.ndarray
    S: np.ndarray
    accepted: bool
    reason: str = ""


# --------------------------------------------------------------------------
# building blocks


def strapdown_step(nav: NavState, accel, gyro, dt: float, next_accel=None, next_gyro=None) -> NavState:
    """
    One strapdown integration step with bias-corrected IMU readings.

    The attitude is advanced by the quaternion exponential of the gyro
    increment; the specific force is rotated with the mid-interval attitude.
    When the samples closing the interval are given, the interval rates are the
    average of both ends (trapezoidal rule), otherwise the opening sample is held.
    """
    accel = np.asarray(accel, float)
    gyro = np.asarray(gyro, float)
    if next_accel is not None:
        accel = 0.5 * (accel + np.asarray(next_accel, float))
    if next_gyro is not None:
        gyro = 0.5 * (gyro + np.asarray(next_gyro, float))
    out, _ = _strapdown(nav, accel, gyro, dt)
    return out


def _strapdown(nav: NavState, accel, gyro, dt):
    if not (np.all(np.isfinite(accel)) and np.all(np.isfinite(gyro))):
        raise InputError(f"non-finite IMU sample at t={nav.time:.3f}")
    w = (gyro - nav.gyro_bias_est) * dt
    q_mid = quat_multiply(nav.attitude, quat_from_rotvec(0.5 * w))
    C_mid = quat_to_dcm(q_mid)
    f_n = C_mid @ (accel - nav.accel_bias_est)
    v_new = nav.velocity_n + (f_n + GRAVITY_N) * dt
    p_new = nav.position + 0.5 * (nav.velocity_n + v_new) * dt
    q_new = quat_normalize(quat_multiply(nav.attitude, quat_from_rotvec(w)))
    out = NavState(nav.time + dt, p_new, v_new, q_new, nav.accel_bias_est, nav.gyro_bias_est)
    return out, (C_mid, f_n)


def build_system_matrices(C_bn, f_n) -> tuple[np.ndarray, np.ndarray]:
    """
    Continuous-time error dynamics ``F`` and noise routing ``G``.

    ``C_bn`` is the body-to-navigation DCM (or a NavState, whose attitude is used)
    and ``f_n`` the specific force in the navigation frame.
    """
    if isinstance(C_bn, NavState):
        C_bn = quat_to_dcm(C_bn.attitude)
    F = np.zeros((N_STATES, N_STATES))
    F[VEL, ATT] = skew(f_n)
    F[VEL, BA] = C_bn
    F[ATT, BG] = -C_bn
    G = np.zeros((N_STATES, N_STATES))
    G[VEL, 0:3] = C_bn
    G[ATT, 3:6] = -C_bn
    G[BA, 6:9] = _I3
    G[BG, 9:12] = _I3
    return F, G


def propagate_covariance(fs: FilterState, F, G, dt: float) -> FilterState:
    """``P <- Phi P Phi^T + G Qc G^T dt`` with a second-order transition matrix."""
    if not dt > 0:
        raise ValueError("propagation interval must be positive")
    Fdt = F * dt
    Phi = _I12 + Fdt + 0.5 * (Fdt @ Fdt)
    P = Phi @ fs.P @ Phi.T + (G @ fs.Q @ G.T) * dt
    return FilterState(0.5 * (P + P.T), fs.Q, fs.last_update_time)


def measurement_matrix(velocity_n) -> np.ndarray:
    H = np.zeros((3, N_STATES))
    H[:, VEL] = _I3
    H[:, ATT] = -skew(velocity_n)
    return H


def measurement_covariance(nav: NavState, estimate: VelocityEstimate, adaptive: bool, constant_std: float):
    """Navigation-frame R for one DVL update."""
    if not adaptive:
        return constant_std**2 * _I3
    cov = estimate.covariance
    if np.array_equal(cov, cov[0, 0] * _I3):
        # isotropic covariance is rotation invariant; skip the rotation so the
        # result is bit-identical to the constant-R path
        return cov.copy()
    C = quat_to_dcm(nav.attitude)
    R = C @ cov @ C.T
    return 0.5 * (R + R.T)


def kalman_gain_update(P, H, R, dz, joseph: bool = True):
    """
    Kalman gain, corrected error state and posterior covariance.

    Returns ``(dx, P_post, S, K)``. Raises FilterFault if the innovation
    covariance is numerically singular.
    """
    S = H @ P @ H.T + R
    S = 0.5 * (S + S.T)
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > 1e12:
        raise FilterFault(f"innovation covariance not invertible (condition number {cond:.3g})")
    K = np.linalg.solve(S, H @ P).T  # P H^T S^-1, using symmetry of P and S
    dx = K @ dz
    IKH = _I12 - K @ H
    if joseph:
        P_post = IKH @ P @ IKH.T + K @ R @ K.T
    else:
        P_post = IKH @ P
    return dx, 0.5 * (P_post + P_post.T), S, K


def inject(nav: NavState, dx) -> NavState:
    """Apply a corrected error state to the navigation solution (closed loop)."""
    q = quat_normalize(quat_multiply(quat_from_rotvec(dx[ATT]), nav.attitude))
    return NavState(
        nav.time,
        nav.position,
        nav.velocity_n - dx[VEL],
        q,
        nav.accel_bias_est + dx[BA],
        nav.gyro_bias_est + dx[BG],
    )


def dvl_update(
    nav: NavState,
    fs: FilterState,
    estimate: VelocityEstimate,
    adaptive: bool,
    constant_r_std: float = 0.02,
    joseph: bool = True,
):
    """
    Fuse one DVL-frame velocity estimate.

    Returns
    -------
    nav : NavState
        Corrected navigation state (error state reset to zero).
    fs : FilterState
    diag : UpdateDiagnostics
        ``accepted`` is False when R is not PSD; nav and fs are then unchanged.
    """
    C = quat_to_dcm(nav.attitude)
    z = C @ estimate.velocity_dvl
    dz = nav.velocity_n - z
    R = measurement_covariance(nav, estimate, adaptive, constant_r_std)
    H = measurement_matrix(nav.velocity_n)
    if not np.all(np.isfinite(R)) or np.linalg.eigvalsh(R).min() < -1e-12 * max(np.abs(R).max(), 1e-30):
        log.warning("t=%.3f: measurement covariance not PSD, update rejected", nav.time)
        nan = np.full((3, 3), np.nan)
        return nav, fs, UpdateDiagnostics(dz, R, nan, False, "R not positive semidefinite")
    dx, P, S, _ = kalman_gain_update(fs.P, H, R, dz, joseph)
    return inject(nav, dx), FilterState(P, fs.Q, nav.time), UpdateDiagnostics(dz, R, S, True)


# --------------------------------------------------------------------------
# full run


@dataclass(frozen=True)
class VelocityTrack:
    """Time-stamped DVL-frame velocity estimates with covariances."""

    time: np.ndarray
    velocity: np.ndarray
    covariance: np.ndarray
    source: str

    def __len__(self):
        return len(self.time)

    def estimate(self, j) -> VelocityEstimate:
        return VelocityEstimate(self.velocity[j], self.covariance[j], self.source)


@dataclass
class FusionResult:
    time: np.ndarray
    position: np.ndarray
    velocity_n: np.ndarray
    attitude: np.ndarray
    accel_bias: np.ndarray
    gyro_bias: np.ndarray
    p_diag: np.ndarray
    innovation: np.ndarray
    r_diag: np.ndarray
    updated: np.ndarray
    covariances: dict = field(default_factory=dict)  # epoch index -> P after update
    min_eig: np.ndarray | None = None
    max_asym: np.ndarray | None = None

    @property
    def euler_deg(self) -> np.ndarray:
        return np.degrees(euler_from_quat(self.attitude))

    def __len__(self):
        return len(self.time)


def initial_state_from_truth(truth: GroundTruth, config: EkfConfig, index: int = 0):
    """
    Initial navigation state seeded from truth.

    With ``config.perturb_initial`` the velocity and attitude are perturbed by a
    draw from the initial covariance (seeded by ``config.seed``).
    """
    q = truth.attitude[index].copy()
    v = truth.velocity_n[index].copy()
    if config.perturb_initial:
        rng = np.random.default_rng(config.seed)
        v = v + rng.standard_normal(3) * config.init_velocity_std
        eps = rng.standard_normal(3) * config.init_attitude_std
        # C_est = (I - [eps x]) C_true
        q = quat_normalize(quat_multiply(quat_from_rotvec(-eps), q))
    return NavState(float(truth.time[index]), truth.position[index].copy(), v, q)


def _dvl_schedule(imu_time, track_time):
    if np.any(np.diff(imu_time) <= 0):
        raise InputError("IMU time stamps must be strictly increasing")
    if len(track_time) and np.any(np.diff(track_time) <= 0):
        raise InputError("DVL time stamps must be strictly increasing")
    rate = 1.0 / np.median(np.diff(imu_time)) if len(imu_time) > 1 else 1.0
    idx = np.rint((np.asarray(track_time) - imu_time[0]) * rate).astype(int)
    inside = (idx >= 0) & (idx < len(imu_time))
    if not np.all(inside):
        raise InputError("DVL epochs fall outside the IMU time span")
    if np.any(np.abs(imu_time[idx] - track_time) > 1e-6):
        raise InputError("DVL epochs are not a subset of IMU epochs")
    return idx


def run_fusion(
    imu: ImuData,
    track: VelocityTrack,
    initial: NavState,
    config: EkfConfig,
    record_covariance: bool = False,
    check_health: bool = False,
) -> FusionResult:
    """
    Propagate at the IMU rate and update at every DVL epoch.

    Each interval is integrated with the average of its two bounding IMU samples.

    Row k of the result holds the state at ``imu.time[k]`` after any update at
    that epoch. With ``check_health`` the minimum eigenvalue and the largest
    asymmetry of P are recorded after every propagation and update.
    """
    t = np.asarray(imu.time, float)
    n = len(t)
    if n == 0:
        raise InputError("empty IMU stream")
    dvl_idx = _dvl_schedule(t, track.time)
    dvl_at = -np.ones(n, dtype=int)
    dvl_at[dvl_idx] = np.arange(len(dvl_idx))

    nav = initial.copy()
    nav.time = float(t[0])
    fs = FilterState(config.initial_covariance(), config.continuous_noise())

    res = FusionResult(
        time=t.copy(),
        position=np.empty((n, 3)),
        velocity_n=np.empty((n, 3)),
        attitude=np.empty((n, 4)),
        accel_bias=np.empty((n, 3)),
        gyro_bias=np.empty((n, 3)),
        p_diag=np.empty((n, N_STATES)),
        innovation=np.zeros((n, 3)),
        r_diag=np.zeros((n, 3)),
        updated=np.zeros(n, dtype=bool),
        min_eig=np.empty(n) if check_health else None,
        max_asym=np.empty(n) if check_health else None,
    )
    if not (np.all(np.isfinite(imu.accel)) and np.all(np.isfinite(imu.gyro))):
        bad = int(np.flatnonzero(~np.all(np.isfinite(np.hstack([imu.accel, imu.gyro])), axis=1))[0])
        raise InputError(f"non-finite IMU sample at t={t[bad]:.3f}")
    accel = np.ascontiguousarray(imu.accel, dtype=float)
    gyro = np.ascontiguousarray(imu.gyro, dtype=float)
    q = nav.attitude.astype(float).copy()
    v = nav.velocity_n.astype(float).copy()
    p = nav.position.astype(float).copy()
    ba = nav.accel_bias_est.astype(float).copy()
    bg = nav.gyro_bias_est.astype(float).copy()
    P = np.ascontiguousarray(fs.P, dtype=float).copy()
    Qc = np.ascontiguousarray(fs.Q, dtype=float)
    min_eig = res.min_eig if check_health else np.empty(0)
    if check_health:
        res.max_asym[:] = 0.0

    def log_row(k):
        res.position[k] = p
        res.velocity_n[k] = v
        res.attitude[k] = q
        res.p_diag[k] = np.diag(P)

    log_row(0)
    if check_health:
        min_eig[0] = np.linalg.eigvalsh(P).min()
    stops = sorted(set(int(i) for i in dvl_idx) | {n - 1})
    last_r = np.full(3, np.nan)
    k_prev = 0
    bias_from = 0
    for k in stops:
        if k > k_prev:
            propagate_segment(
                k_prev, k, t, accel, gyro, q, v, p, ba, bg, P, Qc,
                res.position, res.velocity_n, res.attitude, res.p_diag,
                check_health, min_eig,
            )
            k_prev = k
        j = dvl_at[k]
        if j < 0:
            continue
        res.accel_bias[bias_from:k] = ba
        res.gyro_bias[bias_from:k] = bg
        res.r_diag[bias_from:k] = last_r
        bias_from = k
        nav = NavState(float(t[k]), p, v, q, ba, bg)
        nav, fs, diag = dvl_update(
            nav, FilterState(P, Qc), track.estimate(j), config.adaptive_r, config.constant_r_std, config.joseph_form
        )
        if diag.accepted:
            res.updated[k] = True
            res.innovation[k] = diag.innovation
            last_r = np.diag(diag.R).copy()
            if record_covariance:
                res.covariances[k] = fs.P.copy()
            q, v = nav.attitude.copy(), nav.velocity_n.copy()
            ba, bg = nav.accel_bias_est.copy(), nav.gyro_bias_est.copy()
            P = np.ascontiguousarray(fs.P).copy()
        if check_health:
            min_eig[k] = min(min_eig[k], np.linalg.eigvalsh(P).min()) if k > 0 else np.linalg.eigvalsh(P).min()
            res.max_asym[k] = np.abs(P - P.T).max()
        log_row(k)
    res.accel_bias[bias_from:] = ba
    res.gyro_bias[bias_from:] = bg
    res.r_diag[bias_from:] = last_r
    return res

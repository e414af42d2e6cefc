"""
CSV schemas for every artifact exchanged between pipeline stages.

All files are comma-separated with a single header row and values written with
``%.17g`` so that a write/read round trip is lossless.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from .ekf import FusionResult, VelocityTrack
from .errors import InputError
from .sim import BeamData, GroundTruth, ImuData

TRUTH_COLUMNS = (
    "t", "pn", "pe", "pd", "vn", "ve", "vd", "qw", "qx", "qy", "qz",
    "wx", "wy", "wz", "fx", "fy", "fz",
)
IMU_COLUMNS = ("t", "ax", "ay", "az", "gx", "gy", "gz")
BEAM_COLUMNS = ("t", "b1", "b2", "b3", "b4", "vx_true", "vy_true", "vz_true")
VELOCITY_COLUMNS = ("t", "vx", "vy", "vz", "r11", "r22", "r33")
NAV_COLUMNS = (
    "t", "vn", "ve", "vd", "roll_deg", "pitch_deg", "yaw_deg",
    "p_vn", "p_ve", "p_vd", "p_roll", "p_pitch", "p_yaw",
    "innov_x", "innov_y", "innov_z", "r11", "r22", "r33", "updated",
)
NLL_COLUMNS = ("iteration", "nll")


def bias_tag(bias: float) -> str:
    """File-name suffix for a bias level, e.g. ``_bias0.011``."""
    return f"_bias{float(bias):g}"


def write_table(path, columns, data) -> Path:
    path = Path(path)
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(columns):
        raise ValueError(f"expected {len(columns)} columns, got shape {data.shape}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(columns), comments="")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc
    return path


def read_table(path, columns, allow_nan: bool = False) -> np.ndarray:
    path = Path(path)
    try:
        with open(path) as fh:
            header = fh.readline().strip()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if tuple(h.strip() for h in header.split(",")) != tuple(columns):
        raise InputError(f"{path}: expected columns {','.join(columns)}, got {header}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # empty body is reported below
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if data.size == 0:
        raise InputError(f"{path}: no data rows")
    if data.shape[1] != len(columns):
        raise InputError(f"{path}: expected {len(columns)} columns, got {data.shape[1]}")
    if not np.all(np.isfinite(data) | (allow_nan & np.isnan(data))):
        raise InputError(f"{path}: non-finite values")
    return data


# --------------------------------------------------------------------------
# typed wrappers


def write_truth(path, truth: GroundTruth) -> Path:
    data = np.column_stack(
        [truth.time, truth.position, truth.velocity_n, truth.attitude,
         truth.angular_rate_b, truth.specific_force_b]
    )
    return write_table(path, TRUTH_COLUMNS, data)


def read_truth(path) -> GroundTruth:
    d = read_table(path, TRUTH_COLUMNS)
    return GroundTruth(d[:, 0], d[:, 1:4], d[:, 4:7], d[:, 7:11], d[:, 11:14], d[:, 14:17])


def write_imu(path, imu: ImuData) -> Path:
    return write_table(path, IMU_COLUMNS, np.column_stack([imu.time, imu.accel, imu.gyro]))


def read_imu(path) -> ImuData:
    d = read_table(path, IMU_COLUMNS)
    return ImuData(d[:, 0], d[:, 1:4], d[:, 4:7])


def write_beams(path, beams: BeamData) -> Path:
    data = np.column_stack([beams.time, beams.beams, beams.truth_velocity_dvl])
    return write_table(path, BEAM_COLUMNS, data)


def read_beams(path) -> BeamData:
    d = read_table(path, BEAM_COLUMNS)
    return BeamData(d[:, 0], d[:, 1:5], d[:, 5:8])


def write_velocity(path, track: VelocityTrack) -> Path:
    """Only the covariance diagonal is stored; off-diagonal terms are dropped."""
    diag = np.diagonal(track.covariance, axis1=1, axis2=2)
    return write_table(path, VELOCITY_COLUMNS, np.column_stack([track.time, track.velocity, diag]))


def read_velocity(path, source: str = "external") -> VelocityTrack:
    d = read_table(path, VELOCITY_COLUMNS)
    cov = np.zeros((len(d), 3, 3))
    cov[:, [0, 1, 2], [0, 1, 2]] = d[:, 4:7]
    return VelocityTrack(d[:, 0], d[:, 1:4], cov, source)


def nav_log_array(result: FusionResult) -> np.ndarray:
    p_att = np.degrees(np.sqrt(result.p_diag[:, 3:6]))
    return np.column_stack(
        [
            result.time,
            result.velocity_n,
            result.euler_deg,
            np.sqrt(result.p_diag[:, 0:3]),
            p_att,
            result.innovation,
            result.r_diag,
            result.updated.astype(float),
        ]
    )


def write_nav_log(path, result: FusionResult) -> Path:
    """
    Navigation log, one row per IMU epoch.

    ``p_*`` columns are one-sigma values (m/s and degrees); ``r11..r33`` hold the
    diagonal of the most recent accepted measurement covariance, NaN before the
    first update.
    """
    return write_table(path, NAV_COLUMNS, nav_log_array(result))


def read_nav_log(path) -> np.ndarray:
    return read_table(path, NAV_COLUMNS, allow_nan=True)


def write_nll_trace(path, trace) -> Path:
    trace = np.asarray(trace, float)
    return write_table(path, NLL_COLUMNS, np.column_stack([np.arange(len(trace)), trace]))

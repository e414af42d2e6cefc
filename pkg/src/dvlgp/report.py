"""
Error statistics against simulator ground truth.

Angle errors are taken from the body-frame quaternion difference
``q_true^-1 * q_est`` decomposed into ZYX Euler angles and wrapped into
(-180, 180] degrees before squaring.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import InputError
from .io import read_nav_log, read_truth
from .rotations import quat_from_euler, wrap_angle_deg
from .sim import GroundTruth

TABLE_COLUMNS = (
    "trajectory", "bias", "method", "vn", "ve", "vd", "roll", "pitch", "yaw", "vel_norm", "angle_norm",
)
VELOCITY_RMSE_COLUMNS = ("bias", "rmse_ls", "rmse_mogpr", "improvement_pct")
NOISE_COLUMNS = ("trajectory", "bias", "method", "t", "std_x", "std_y", "std_z")
_NAV_NAME = re.compile(r"^nav_(?P<method>[a-z]+)(?:_bias(?P<bias>[0-9.eE+-]+))?\.csv$")


@dataclass(frozen=True)
class RmseRow:
    """RMSE of one navigation run: velocity in m/s, angles in degrees."""

    velocity: np.ndarray
    angles: np.ndarray

    @property
    def vel_norm(self) -> float:
        return float(np.linalg.norm(self.velocity))

    @property
    def angle_norm(self) -> float:
        return float(np.linalg.norm(self.angles))


def rmse(err, axis=0) -> np.ndarray:
    err = np.asarray(err, float)
    return np.sqrt(np.mean(err**2, axis=axis))


def velocity_error_norm_rmse(estimate, truth) -> float:
    """RMSE of the 3-D error norm, ``sqrt(mean ||e||^2)``."""
    err = np.asarray(estimate, float) - np.asarray(truth, float)
    return float(np.sqrt(np.mean(np.sum(err**2, axis=1))))


def improvement_pct(rmse_ls: float, rmse_other: float) -> float:
    return 100.0 * (1.0 - rmse_other / rmse_ls)


def angle_errors_deg(q_est, q_true) -> np.ndarray:
    """Wrapped roll/pitch/yaw of ``q_true^-1 * q_est`` in degrees, shape (N, 3)."""
    est = Rotation.from_quat(np.roll(np.atleast_2d(q_est), -1, axis=-1))
    true = Rotation.from_quat(np.roll(np.atleast_2d(q_true), -1, axis=-1))
    ypr = (true.inv() * est).as_euler("ZYX", degrees=True)
    return wrap_angle_deg(ypr[:, ::-1])


def align_to_truth(times, truth: GroundTruth) -> np.ndarray:
    """Indices into ``truth`` for each time stamp; InputError unless all match."""
    times = np.asarray(times, float)
    if len(times) == 0:
        raise InputError("empty log")
    idx = np.searchsorted(truth.time, times)
    idx = np.clip(idx, 0, len(truth) - 1)
    left = np.clip(idx - 1, 0, len(truth) - 1)
    idx = np.where(np.abs(truth.time[left] - times) < np.abs(truth.time[idx] - times), left, idx)
    if np.any(np.abs(truth.time[idx] - times) > 1e-6):
        raise InputError("log time stamps do not match the truth time base")
    return idx


def rmse_from_states(time, velocity_n, attitude, truth: GroundTruth, skip_seconds: float = 0.0) -> RmseRow:
    idx = align_to_truth(time, truth)
    keep = np.asarray(time) >= truth.time[0] + skip_seconds
    if not np.any(keep):
        raise InputError("skip_seconds removes the whole run")
    idx = idx[keep]
    v_err = np.asarray(velocity_n)[keep] - truth.velocity_n[idx]
    a_err = angle_errors_deg(np.asarray(attitude)[keep], truth.attitude[idx])
    return RmseRow(rmse(v_err), rmse(a_err))


def rmse_from_log(log: np.ndarray, truth: GroundTruth, skip_seconds: float = 0.0) -> RmseRow:
    """RMSE of a navigation log array (``io.NAV_COLUMNS`` layout)."""
    q = quat_from_euler(*np.radians(log[:, 4:7]).T)
    return rmse_from_states(log[:, 0], log[:, 1:4], q, truth, skip_seconds)


def parse_nav_name(path) -> tuple[str, float]:
    """``nav_<method>_bias<value>.csv`` -> (method, bias); bias is NaN when absent."""
    m = _NAV_NAME.match(Path(path).name)
    if m is None:
        raise InputError(f"not a navigation log name: {Path(path).name}")
    bias = float(m["bias"]) if m["bias"] is not None else float("nan")
    return m["method"], bias


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_records(path, columns, rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(row[c]) for c in columns])
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc
    return path


def read_records(path, columns) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != tuple(columns):
                raise InputError(f"{path}: expected columns {','.join(columns)}")
            return list(reader)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def mission_report(mission_dir, skip_seconds: float = 0.0):
    """
    RMSE rows and noise-over-time rows for every ``nav_*.csv`` in a mission directory.

    The directory must also hold the mission's ``truth.csv``.
    """
    mission_dir = Path(mission_dir)
    truth = read_truth(mission_dir / "truth.csv")
    logs = sorted(mission_dir.glob("nav_*.csv"))
    if not logs:
        raise InputError(f"no navigation logs in {mission_dir}")
    table, noise = [], []
    for path in logs:
        method, bias = parse_nav_name(path)
        log = read_nav_log(path)
        row = rmse_from_log(log, truth, skip_seconds)
        table.append(
            dict(
                trajectory=mission_dir.name, bias=bias, method=method,
                vn=row.velocity[0], ve=row.velocity[1], vd=row.velocity[2],
                roll=row.angles[0], pitch=row.angles[1], yaw=row.angles[2],
                vel_norm=row.vel_norm, angle_norm=row.angle_norm,
            )
        )
        upd = log[:, -1] > 0.5
        std = np.sqrt(log[upd][:, 16:19])
        for t, s in zip(log[upd, 0], std):
            noise.append(
                dict(trajectory=mission_dir.name, bias=bias, method=method, t=t,
                     std_x=s[0], std_y=s[1], std_z=s[2])
            )
    return table, noise


def build_report(mission_dirs, out_dir, skip_seconds: float = 0.0) -> list[Path]:
    """Per-run RMSE table and measurement-noise time series for a set of missions."""
    table, noise = [], []
    for d in mission_dirs:
        t, n = mission_report(d, skip_seconds)
        table += t
        noise += n
    key = lambda r: (r["trajectory"], np.nan_to_num(r["bias"], nan=-1.0), r["method"])
    table.sort(key=key)
    noise.sort(key=lambda r: key(r) + (r["t"],))
    out_dir = Path(out_dir)
    return [
        write_records(out_dir / "rmse_table.csv", TABLE_COLUMNS, table),
        write_records(out_dir / "noise_over_time.csv", NOISE_COLUMNS, noise),
    ]

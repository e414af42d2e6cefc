"""
Small attitude helpers.

Quaternions are scalar-first ``[w, x, y, z]`` and describe the body-to-navigation
rotation, so ``quat_to_dcm(q) @ v_b`` gives the navigation-frame vector. Euler
angles follow the aerospace ZYX (yaw, pitch, roll) sequence.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation


def skew(v) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def quat_multiply(p, q) -> np.ndarray:
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return np.array(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ]
    )


def quat_conjugate(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.sqrt(q @ q)


def quat_from_rotvec(phi) -> np.ndarray:
    """Exponential map of a rotation vector (radians)."""
    phi = np.asarray(phi, dtype=float)
    angle = np.sqrt(phi @ phi)
    if angle < 1e-8:
        # second-order series; exact to machine precision at this size
        q = np.array([1.0 - angle * angle / 8.0, *(0.5 * phi)])
        return q / np.sqrt(q @ q)
    half = 0.5 * angle
    return np.array([np.cos(half), *(np.sin(half) / angle * phi)])


def quat_to_dcm(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _to_scipy(q):
    q = np.asarray(q, dtype=float)
    return Rotation.from_quat(np.roll(q, -1, axis=-1))


def _from_scipy(rot: Rotation) -> np.ndarray:
    q = np.roll(rot.as_quat(), 1, axis=-1)
    # keep a non-negative scalar part for a canonical representation
    sign = np.where(q[..., :1] < 0.0, -1.0, 1.0)
    return q * sign


def quat_from_euler(roll, pitch, yaw) -> np.ndarray:
    """Quaternion(s) from ZYX Euler angles in radians; broadcasts over arrays."""
    angles = np.stack(np.broadcast_arrays(yaw, pitch, roll), axis=-1)
    return _from_scipy(Rotation.from_euler("ZYX", angles))


def euler_from_quat(q) -> np.ndarray:
    """``[roll, pitch, yaw]`` in radians for one quaternion or an (N, 4) array."""
    return _to_scipy(q).as_euler("ZYX")[..., ::-1]


def dcm_from_quat_batch(q) -> np.ndarray:
    return _to_scipy(q).as_matrix()


def quat_error_rotvec(q_true, q_est) -> np.ndarray:
    """
    Rotation vector of ``C_est C_true^T`` (navigation-frame attitude error).

    Accepts single quaternions or (N, 4) arrays.
    """
    err = _to_scipy(q_est) * _to_scipy(q_true).inv()
    return err.as_rotvec()


def wrap_angle_deg(angle):
    """Wrap degrees into (-180, 180]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + 180.0, 360.0) - 180.0
    return np.where(wrapped == -180.0, 180.0, wrapped)

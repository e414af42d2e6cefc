"""Compiled strapdown + covariance propagation between DVL epochs.

Numerically mirrors ``ekf._strapdown``, ``ekf.build_system_matrices`` and
``ekf.propagate_covariance``; the test suite checks the two paths against each other.
"""

import numpy as np
from numba import njit

GRAVITY = 9.80665


@njit(cache=True)
def _qmul(p, q):
    return np.array(
        [
            p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
            p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
            p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
            p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
        ]
    )


@njit(cache=True)
def _qexp(phi):
    angle = np.sqrt(phi[0] * phi[0] + phi[1] * phi[1] + phi[2] * phi[2])
    if angle < 1e-8:
        q = np.array([1.0 - angle * angle / 8.0, 0.5 * phi[0], 0.5 * phi[1], 0.5 * phi[2]])
        return q / np.sqrt(q[0] ** 2 + q[1] ** 2 + q[2] ** 2 + q[3] ** 2)
    half = 0.5 * angle
    s = np.sin(half) / angle
    return np.array([np.cos(half), s * phi[0], s * phi[1], s * phi[2]])


@njit(cache=True)
def _dcm(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    C = np.empty((3, 3))
    C[0, 0] = 1 - 2 * (y * y + z * z)
    C[0, 1] = 2 * (x * y - w * z)
    C[0, 2] = 2 * (x * z + w * y)
    C[1, 0] = 2 * (x * y + w * z)
    C[1, 1] = 1 - 2 * (x * x + z * z)
    C[1, 2] = 2 * (y * z - w * x)
    C[2, 0] = 2 * (x * z - w * y)
    C[2, 1] = 2 * (y * z + w * x)
    C[2, 2] = 1 - 2 * (x * x + y * y)
    return C


@njit(cache=True)
def propagate_segment(
    k0, k1, t, accel, gyro, q, v, p, ba, bg, P, Qc,
    out_pos, out_vel, out_att, out_pdiag, health, out_min_eig,
):
    """Advance from epoch k0 to k1 in place; logs rows k0+1..k1."""
    g_n = np.array([0.0, 0.0, GRAVITY])
    I12 = np.eye(12)
    for k in range(k0 + 1, k1 + 1):
        dt = t[k] - t[k - 1]
        f_b = 0.5 * (accel[k - 1] + accel[k]) - ba
        w = (0.5 * (gyro[k - 1] + gyro[k]) - bg) * dt
        C_mid = _dcm(_qmul(q, _qexp(0.5 * w)))
        f_n = C_mid @ f_b
        v_new = v + (f_n + g_n) * dt
        p += 0.5 * (v + v_new) * dt
        v[:] = v_new
        q_new = _qmul(q, _qexp(w))
        q[:] = q_new / np.sqrt(q_new @ q_new)

        F = np.zeros((12, 12))
        F[0, 4] = -f_n[2]
        F[0, 5] = f_n[1]
        F[1, 3] = f_n[2]
        F[1, 5] = -f_n[0]
        F[2, 3] = -f_n[1]
        F[2, 4] = f_n[0]
        G = np.zeros((12, 12))
        for i in range(3):
            for j in range(3):
                F[i, 6 + j] = C_mid[i, j]
                F[3 + i, 9 + j] = -C_mid[i, j]
                G[i, j] = C_mid[i, j]
                G[3 + i, 3 + j] = -C_mid[i, j]
        for i in range(6, 12):
            G[i, i] = 1.0
        Fdt = F * dt
        Phi = I12 + Fdt + 0.5 * (Fdt @ Fdt)
        Pn = Phi @ P @ Phi.T + (G @ Qc @ G.T) * dt
        P[:, :] = 0.5 * (Pn + Pn.T)

        out_pos[k] = p
        out_vel[k] = v
        out_att[k] = q
        for i in range(12):
            out_pdiag[k, i] = P[i, i]
        if health:
            out_min_eig[k] = np.linalg.eigvalsh(P)[0]

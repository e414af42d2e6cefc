"""Least-squares DVL velocity from four beam measurements."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import solve_triangular

from .errors import GeometryError

MANUFACTURER_NOISE_STD = 0.02  # m/s per beam


class Source(str, Enum):
    LS = "ls"
    MOGPR = "mogpr"
    EXTERNAL = "external"


@dataclass(frozen=True)
class VelocityEstimate:
    velocity_dvl: np.ndarray
    covariance: np.ndarray
    source: Source = Source.LS

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (3, 3):
            raise ValueError("covariance must be 3x3")
        object.__setattr__(self, "velocity_dvl", np.asarray(self.velocity_dvl, dtype=float))
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "source", Source(self.source))


class LeastSquaresEstimator:
    """
    Pseudo-inverse solver for a fixed beam matrix.

    The QR factorization of ``T`` is computed once; ``estimate`` accepts a single
    4-vector or an (N, 4) array of beam measurements.
    """

    def __init__(self, T, noise_std: float = MANUFACTURER_NOISE_STD):
        T = np.asarray(T, dtype=float)
        if T.shape != (4, 3):
            raise ValueError(f"transformation matrix must be 4x3, got {T.shape}")
        Q, R = np.linalg.qr(T)
        d = np.abs(np.diag(R))
        if d.min() <= 1e-12 * max(d.max(), 1.0):
            raise GeometryError("beam transformation matrix is rank deficient")
        self.T = T
        self._Q = Q
        self._R = R
        self.noise_std = float(noise_std)
        R_inv = solve_triangular(R, np.eye(3))
        cov = self.noise_std**2 * (R_inv @ R_inv.T)
        self.covariance = 0.5 * (cov + cov.T)

    def estimate(self, beams) -> np.ndarray:
        beams = np.asarray(beams, dtype=float)
        rhs = beams @ self._Q  # Q^T b for each row
        return solve_triangular(self._R, rhs.T).T

    def __call__(self, beams) -> VelocityEstimate:
        return VelocityEstimate(self.estimate(beams), self.covariance.copy(), Source.LS)


def solve_ls(T, beams, noise_std: float = MANUFACTURER_NOISE_STD) -> VelocityEstimate:
    """
    Least-squares DVL velocity ``(T^T T)^-1 T^T beams``.

    Parameters
    ----------
    T : (4, 3) array
        Beam transformation matrix.
    beams : (4,) array
        Measured along-beam velocities [m/s].
    noise_std : float
        Per-beam noise standard deviation used for the covariance ``s^2 (T^T T)^-1``.

    Returns
    -------
    VelocityEstimate
    """
    return LeastSquaresEstimator(T, noise_std)(beams)

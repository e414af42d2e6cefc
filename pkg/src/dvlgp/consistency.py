"""
Filter consistency checks: true error states and NEES.

The error state follows the filter's conventions: ``dv = v_est - v_true``,
``C_est = (I - [eps x]) C_true`` and ``db = b_true - b_est``.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import chi2

from .config import ExperimentConfig
from .ekf import N_STATES, FusionResult, initial_state_from_truth, run_fusion
from .pipeline import derive_seed, ekf_config, ls_track
from .rotations import quat_error_rotvec
from .sim import (
    IMU_RATE,
    DvlErrorSpec,
    GroundTruth,
    ImuErrorSpec,
    Pattern,
    TrajectorySpec,
    generate_trajectory,
    imu_bias_history,
    synthesize_beams,
    synthesize_imu,
)

_MOTION, _BIAS, _IMU, _BEAMS, _INIT = 1, 2, 3, 4, 5


def true_error_states(result: FusionResult, truth: GroundTruth, accel_bias, gyro_bias, index) -> np.ndarray:
    """(m, 12) true error states at the given epoch indices (truth and result share epochs)."""
    index = np.asarray(index)
    dv = result.velocity_n[index] - truth.velocity_n[index]
    eps = -quat_error_rotvec(truth.attitude[index], result.attitude[index])
    dba = np.asarray(accel_bias) - result.accel_bias[index]
    dbg = np.asarray(gyro_bias) - result.gyro_bias[index]
    return np.column_stack([dv, np.atleast_2d(eps), dba, dbg])


def nees(result: FusionResult, truth: GroundTruth, accel_bias, gyro_bias) -> tuple[np.ndarray, np.ndarray]:
    """
    NEES after every recorded update.

    ``result`` must come from ``run_fusion(..., record_covariance=True)``.
    The true biases are constant 3-vectors or full (n, 3) histories.

    Returns
    -------
    index : (m,) int array
        Epochs with a recorded posterior covariance.
    values : (m,) array
    """
    index = np.array(sorted(result.covariances))
    accel_bias, gyro_bias = np.asarray(accel_bias), np.asarray(gyro_bias)
    if accel_bias.ndim == 2 and len(accel_bias) == len(truth):
        accel_bias, gyro_bias = accel_bias[index], gyro_bias[index]
    err = true_error_states(result, truth, accel_bias, gyro_bias, index)
    values = np.empty(len(index))
    for i, k in enumerate(index):
        values[i] = err[i] @ np.linalg.solve(result.covariances[k], err[i])
    return index, values


def chi2_band(runs: int, dof: int = N_STATES, level: float = 0.95) -> tuple[float, float]:
    """Two-sided band for the mean of ``runs`` independent chi-square(dof) NEES values."""
    lo, hi = chi2.ppf([(1 - level) / 2, (1 + level) / 2], dof * runs)
    return float(lo / runs), float(hi / runs)


def monte_carlo_nees(
    cfg: ExperimentConfig, runs: int = 25, duration: float = 600.0, seed: int = 0, check_health: bool = False
):
    """
    Zero-bias NEES runs with the LS front end and the filter's own noise model.

    Every run draws its true IMU biases from the initial covariance, simulates
    white noise and bias walks at the levels the filter assumes, and feeds the LS
    estimate with its exact covariance as R. Any mismatch between the filter's
    model and the simulated errors would show up as a biased NEES.

    Returns
    -------
    run_means : (runs,) array
        Mean NEES over the update epochs of each run.
    min_eig : float
        Smallest eigenvalue of P seen in any run (NaN unless ``check_health``).
    """
    geometry = cfg.geometry.geometry()
    means = np.empty(runs)
    min_eig = np.inf if check_health else np.nan
    for r in range(runs):
        ekf = ekf_config(cfg, adaptive_r=True, seed=derive_seed(seed, r, _INIT))
        sd = np.sqrt(np.diag(ekf.initial_covariance()))
        rng = np.random.default_rng(derive_seed(seed, r, _BIAS))
        ba = rng.standard_normal(3) * sd[6:9]
        bg = rng.standard_normal(3) * sd[9:12]
        truth = generate_trajectory(TrajectorySpec(Pattern.MIXED, duration, seed=derive_seed(seed, r, _MOTION)))
        spec = ImuErrorSpec(ba, bg, ekf.accel_noise_std, ekf.gyro_noise_std, ekf.accel_bias_walk, ekf.gyro_bias_walk)
        imu_seed = derive_seed(seed, r, _IMU)
        imu = synthesize_imu(truth, spec, imu_seed)
        beams = synthesize_beams(
            truth.decimate(IMU_RATE), geometry, DvlErrorSpec(0.0, np.zeros(3), cfg.dvl_errors.noise_std_mps),
            derive_seed(seed, r, _BEAMS),
        )
        res = run_fusion(
            imu, ls_track(cfg, beams), initial_state_from_truth(truth, ekf), ekf,
            record_covariance=True, check_health=check_health,
        )
        _, values = nees(res, truth, *imu_bias_history(truth, spec, imu_seed))
        means[r] = values.mean()
        if check_health:
            min_eig = min(min_eig, float(res.min_eig.min()))
    return means, min_eig

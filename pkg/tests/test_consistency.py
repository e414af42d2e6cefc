import numpy as np
import pytest
from scipy.stats import chi2

from dvlgp.consistency import chi2_band, nees, true_error_states
from dvlgp.ekf import EkfConfig, VelocityTrack, initial_state_from_truth, run_fusion
from dvlgp.geometry import BeamGeometry, build_transform
from dvlgp.ls import LeastSquaresEstimator
from dvlgp.rotations import quat_from_rotvec, quat_multiply
from dvlgp.sim import (
    DvlErrorSpec,
    ImuErrorSpec,
    Pattern,
    TrajectorySpec,
    generate_trajectory,
    imu_bias_history,
    synthesize_beams,
    synthesize_imu,
)


def test_chi2_band_for_25_runs():
    lo, hi = chi2_band(25)
    assert (lo, hi) == pytest.approx((10.156, 13.995), abs=5e-4)
    assert chi2_band(1) == pytest.approx(tuple(chi2.ppf([0.025, 0.975], 12)))
    assert lo < 12.0 < hi


def test_true_error_state_conventions():
    truth = generate_trajectory(TrajectorySpec(duration=1.0))

    class Fake:
        pass

    eps = np.array([1e-3, -2e-3, 3e-4])
    res = Fake()
    res.velocity_n = truth.velocity_n + [0.1, 0.0, 0.0]
    res.attitude = np.array([quat_multiply(quat_from_rotvec(-eps), q) for q in truth.attitude])
    res.accel_bias = np.zeros((len(truth), 3))
    res.gyro_bias = np.full((len(truth), 3), 1e-5)
    err = true_error_states(res, truth, [0.01, 0.0, 0.0], np.zeros(3), [0, 50])
    np.testing.assert_allclose(err[:, 0:3], [[0.1, 0, 0]] * 2, atol=1e-15)
    np.testing.assert_allclose(err[:, 3:6], [eps] * 2, atol=1e-12)
    np.testing.assert_allclose(err[:, 6:9], [[0.01, 0, 0]] * 2)
    np.testing.assert_allclose(err[:, 9:12], -1e-5)


def test_nees_of_short_consistent_run():
    truth = generate_trajectory(TrajectorySpec(Pattern.MIXED, duration=60.0, seed=2))
    cfg = EkfConfig(seed=3)
    spec = ImuErrorSpec(np.zeros(3), np.zeros(3), cfg.accel_noise_std, cfg.gyro_noise_std)
    imu = synthesize_imu(truth, spec, seed=4)
    g = BeamGeometry()
    beams = synthesize_beams(truth.decimate(100), g, DvlErrorSpec(0.0, np.zeros(3), 0.02), seed=5)
    est = LeastSquaresEstimator(build_transform(g))
    track = VelocityTrack(beams.time, est.estimate(beams.beams), np.repeat(est.covariance[None], len(beams), 0), "ls")
    res = run_fusion(imu, track, initial_state_from_truth(truth, cfg), cfg, record_covariance=True)
    ba, bg = imu_bias_history(truth, spec, seed=4)
    idx, values = nees(res, truth, ba[sorted(res.covariances)], bg[sorted(res.covariances)])
    np.testing.assert_array_equal(idx, np.arange(0, len(truth), 100))
    assert np.all(values >= 0)
    # one run is noisy but should sit near the state dimension
    assert 3.0 < values.mean() < 40.0

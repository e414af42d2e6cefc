import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dvlgp.errors import GeometryError
from dvlgp.geometry import BeamGeometry, build_transform
from dvlgp.ls import LeastSquaresEstimator, Source, VelocityEstimate, solve_ls

beam_vec = arrays(float, 4, elements=st.floats(-5.0, 5.0))
scalars = st.floats(-10.0, 10.0)


def _normal_equations(T, beams):
    return np.linalg.inv(T.T @ T) @ T.T @ beams


def test_exact_inversion(transform):
    v = np.array([1.0, -0.5, 0.2])
    est = solve_ls(transform, transform @ v)
    np.testing.assert_allclose(est.velocity_dvl, v, atol=1e-12)
    assert est.source is Source.LS


def test_all_ones_bias_maps_to_vertical(transform):
    v = np.array([1.2, 0.3, -0.1])
    est = solve_ls(transform, transform @ v + 0.011)
    np.testing.assert_allclose(est.velocity_dvl - v, [0.0, 0.0, 0.0117060], atol=5e-8)
    np.testing.assert_allclose(est.velocity_dvl - v, [0.0, 0.0, 0.011 / np.cos(np.radians(20.0))], atol=1e-12)


def test_covariance_closed_form(transform):
    est = solve_ls(transform, np.zeros(4), noise_std=0.02)
    np.testing.assert_allclose(est.covariance, 0.02**2 * np.linalg.inv(transform.T @ transform), rtol=1e-12, atol=1e-17)
    np.testing.assert_array_equal(est.covariance, est.covariance.T)


def test_monte_carlo_std(transform):
    rng = np.random.default_rng(7)
    v = np.array([1.5, 0.1, 0.05])
    beams = transform @ v + 0.02 * rng.standard_normal((10_000, 4))
    err = LeastSquaresEstimator(transform, 0.02).estimate(beams) - v
    expected = np.sqrt(np.diag(0.02**2 * np.linalg.inv(transform.T @ transform)))
    np.testing.assert_allclose(err.std(axis=0), expected, rtol=0.05)
    assert np.all(np.abs(err.mean(axis=0)) < 4 * expected / np.sqrt(len(err)))


def test_batch_matches_single(transform, rng):
    beams = rng.standard_normal((25, 4))
    batch = LeastSquaresEstimator(transform).estimate(beams)
    for b, v in zip(beams, batch):
        np.testing.assert_allclose(v, solve_ls(transform, b).velocity_dvl, atol=1e-14)


def test_rank_deficient_matrix():
    T = np.ones((4, 3))
    with pytest.raises(GeometryError):
        LeastSquaresEstimator(T)
    with pytest.raises(ValueError):
        LeastSquaresEstimator(np.ones((3, 3)))


def test_velocity_estimate_validation():
    with pytest.raises(ValueError):
        VelocityEstimate(np.zeros(3), np.eye(2))
    assert VelocityEstimate(np.zeros(3), np.eye(3), "mogpr").source is Source.MOGPR


@given(beam_vec)
def test_matches_normal_equations(beams):
    T = build_transform(BeamGeometry.from_degrees(20.0))
    np.testing.assert_allclose(solve_ls(T, beams).velocity_dvl, _normal_equations(T, beams), atol=1e-12)


@given(beam_vec, beam_vec, scalars, scalars)
def test_linearity(x, y, a, b):
    T = build_transform(BeamGeometry.from_degrees(20.0))
    lhs = solve_ls(T, a * x + b * y).velocity_dvl
    rhs = a * solve_ls(T, x).velocity_dvl + b * solve_ls(T, y).velocity_dvl
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(rhs).max()) * 100)


@given(st.floats(0.0, 0.1), st.floats(1.0, 80.0))
def test_bias_sensitivity_is_vertical(beta, pitch_deg):
    T = build_transform(BeamGeometry.from_degrees(pitch_deg))
    err = solve_ls(T, np.full(4, beta)).velocity_dvl
    np.testing.assert_allclose(err, [0.0, 0.0, beta / np.cos(np.radians(pitch_deg))], atol=1e-12)


@given(beam_vec)
def test_residual_shrinks_when_noise_removed(noise):
    T = build_transform(BeamGeometry.from_degrees(20.0))
    clean = T @ np.array([1.0, 0.2, 0.1])
    noisy = clean + 0.01 * noise
    r_noisy = np.linalg.norm(noisy - T @ solve_ls(T, noisy).velocity_dvl)
    r_clean = np.linalg.norm(clean - T @ solve_ls(T, clean).velocity_dvl)
    assert r_clean <= r_noisy + 1e-12


@given(beam_vec, st.floats(1e-3, 1.0))
def test_covariance_symmetric_psd(beams, sigma):
    T = build_transform(BeamGeometry.from_degrees(20.0))
    cov = solve_ls(T, beams, sigma).covariance
    np.testing.assert_allclose(cov, cov.T, atol=1e-12)
    assert np.linalg.eigvalsh(cov).min() >= -1e-10

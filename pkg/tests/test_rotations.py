import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.transform import Rotation

from dvlgp.rotations import (
    dcm_from_quat_batch,
    euler_from_quat,
    quat_conjugate,
    quat_error_rotvec,
    quat_from_euler,
    quat_from_rotvec,
    quat_multiply,
    quat_to_dcm,
    skew,
    wrap_angle_deg,
)

small_vec = arrays(float, 3, elements=st.floats(-3.0, 3.0))
unit_quat = arrays(float, 4, elements=st.floats(-1.0, 1.0)).filter(lambda q: np.linalg.norm(q) > 0.1).map(
    lambda q: q / np.linalg.norm(q)
)


def _scipy_dcm(q):
    return Rotation.from_quat([q[1], q[2], q[3], q[0]]).as_matrix()


@given(small_vec, small_vec)
def test_skew_is_cross_product(a, b):
    np.testing.assert_allclose(skew(a) @ b, np.cross(a, b), atol=1e-12)
    np.testing.assert_allclose(skew(a).T, -skew(a))


@given(unit_quat)
def test_dcm_matches_scipy(q):
    np.testing.assert_allclose(quat_to_dcm(q), _scipy_dcm(q), atol=1e-12)


@given(unit_quat, unit_quat)
def test_hamilton_product_composes_rotations(p, q):
    np.testing.assert_allclose(
        quat_to_dcm(quat_multiply(p, q)), quat_to_dcm(p) @ quat_to_dcm(q), atol=1e-12
    )


@given(unit_quat)
def test_conjugate_inverts(q):
    np.testing.assert_allclose(quat_multiply(q, quat_conjugate(q)), [1.0, 0.0, 0.0, 0.0], atol=1e-12)


@given(small_vec)
def test_rotvec_exponential_matches_scipy(phi):
    np.testing.assert_allclose(
        quat_to_dcm(quat_from_rotvec(phi)), Rotation.from_rotvec(phi).as_matrix(), atol=1e-12
    )


@pytest.mark.parametrize("scale", [0.0, 1e-12, 1e-9, 1e-7])
def test_rotvec_small_angle_branch(scale):
    phi = scale * np.array([0.3, -0.2, 0.9])
    q = quat_from_rotvec(phi)
    assert abs(np.linalg.norm(q) - 1.0) < 1e-15
    np.testing.assert_allclose(q[1:], 0.5 * phi, rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize(
    "roll, pitch, yaw",
    [(0.0, 0.0, 0.0), (0.1, -0.2, 2.5), (-0.5, 0.3, -3.0), (0.02, 0.01, np.pi - 1e-3)],
)
def test_euler_round_trip(roll, pitch, yaw):
    q = quat_from_euler(roll, pitch, yaw)
    assert q[0] >= 0.0
    np.testing.assert_allclose(euler_from_quat(q), [roll, pitch, yaw], atol=1e-12)
    # ZYX: C = Rz(yaw) Ry(pitch) Rx(roll)
    expected = Rotation.from_euler("ZYX", [yaw, pitch, roll]).as_matrix()
    np.testing.assert_allclose(quat_to_dcm(q), expected, atol=1e-12)


def test_batch_dcm(rng):
    q = rng.standard_normal((20, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    C = dcm_from_quat_batch(q)
    for k in range(20):
        np.testing.assert_allclose(C[k], quat_to_dcm(q[k]), atol=1e-12)


def test_error_rotvec_sign_convention():
    # C_est = (I - [eps x]) C_true  ->  rotvec(C_est C_true^T) = -eps
    eps = np.array([1e-3, -2e-3, 5e-4])
    q_true = quat_from_euler(0.1, 0.2, 0.3)
    q_est = quat_multiply(quat_from_rotvec(-eps), q_true)
    np.testing.assert_allclose(quat_error_rotvec(q_true, q_est), -eps, atol=1e-15)


@pytest.mark.parametrize(
    "angle, wrapped",
    [(0.0, 0.0), (180.0, 180.0), (-180.0, 180.0), (190.0, -170.0), (540.0, 180.0), (-359.0, 1.0)],
)
def test_wrap_angle(angle, wrapped):
    assert wrap_angle_deg(angle) == pytest.approx(wrapped)

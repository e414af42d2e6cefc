import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dvlgp.geometry import BeamGeometry, beam_direction, build_transform, janus_yaw_angles

pitches = st.floats(min_value=1e-3, max_value=np.pi / 2 - 1e-3)


def _direction_oracle(yaw_deg, pitch_deg):
    y, p = np.radians(yaw_deg), np.radians(pitch_deg)
    return np.array([np.cos(y) * np.sin(p), np.sin(y) * np.sin(p), np.cos(p)])


@pytest.mark.parametrize(
    "index, expected",
    [
        (1, [0.241845, 0.241845, 0.939693]),
        (2, [-0.241845, 0.241845, 0.939693]),
        (3, [-0.241845, -0.241845, 0.939693]),
        (4, [0.241845, -0.241845, 0.939693]),
    ],
)
def test_beam_direction_at_20_deg(index, expected):
    b = beam_direction(index, np.radians(20.0))
    np.testing.assert_allclose(b, expected, atol=5e-7)
    np.testing.assert_allclose(b, _direction_oracle(45.0 + 90.0 * (index - 1), 20.0), atol=1e-15)


def test_janus_yaw_pattern():
    np.testing.assert_allclose(np.degrees(janus_yaw_angles()), [45.0, 135.0, 225.0, 315.0])


@pytest.mark.parametrize("index", [0, 5, -1])
def test_beam_index_out_of_range(index):
    with pytest.raises(ValueError):
        beam_direction(index, 0.3)


@pytest.mark.parametrize("pitch", [0.0, np.pi / 2, -0.1, 2.0])
def test_pitch_out_of_range(pitch):
    with pytest.raises(ValueError):
        beam_direction(1, pitch)
    with pytest.raises(ValueError):
        BeamGeometry(pitch)


def test_geometry_needs_four_yaws():
    with pytest.raises(ValueError):
        BeamGeometry(0.3, (0.0, 1.0, 2.0))


def test_normal_matrix_at_20_deg(transform):
    np.testing.assert_allclose(
        np.diag(transform.T @ transform), [0.233956, 0.233956, 3.532089], atol=5e-7
    )
    off = transform.T @ transform - np.diag(np.diag(transform.T @ transform))
    np.testing.assert_allclose(off, 0.0, atol=1e-15)


def test_transform_is_read_only(transform):
    with pytest.raises(ValueError):
        transform[0, 0] = 1.0


def test_explicit_yaw_override():
    g = BeamGeometry.from_degrees(30.0, [0.0, 90.0, 180.0, 270.0])
    T = build_transform(g)
    np.testing.assert_allclose(T[0], _direction_oracle(0.0, 30.0), atol=1e-15)
    np.testing.assert_allclose(T[2], _direction_oracle(180.0, 30.0), atol=1e-15)


class TestTransformProperties:
    @given(pitches)
    def test_rows_unit_norm_and_rank(self, pitch):
        T = build_transform(BeamGeometry(pitch))
        np.testing.assert_allclose(np.linalg.norm(T, axis=1), 1.0, atol=1e-12)
        assert np.linalg.matrix_rank(T) == 3

    @given(pitches)
    def test_normal_matrix_closed_form(self, pitch):
        T = build_transform(BeamGeometry(pitch))
        s2, c2 = np.sin(pitch) ** 2, np.cos(pitch) ** 2
        np.testing.assert_allclose(T.T @ T, np.diag([2 * s2, 2 * s2, 4 * c2]), atol=1e-12)

    @given(pitches)
    def test_pseudo_inverse_left_inverts(self, pitch):
        T = build_transform(BeamGeometry(pitch))
        pinv = np.linalg.solve(T.T @ T, T.T)
        np.testing.assert_allclose(pinv @ T, np.eye(3), atol=1e-10)

    @given(pitches)
    def test_third_column_and_row_symmetry(self, pitch):
        T = build_transform(BeamGeometry(pitch))
        np.testing.assert_allclose(T @ [0.0, 0.0, 1.0], np.full(4, np.cos(pitch)), atol=1e-15)
        expected = [0.0, 0.0, 2 * np.cos(pitch)]
        np.testing.assert_allclose(T[0] + T[2], expected, atol=1e-12)
        np.testing.assert_allclose(T[1] + T[3], expected, atol=1e-12)

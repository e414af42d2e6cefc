"""Janus beam geometry of a four-beam DVL."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BEAM_COUNT = 4
DEFAULT_PITCH_DEG = 20.0


def janus_yaw_angles() -> tuple[float, ...]:
    """Beam yaw angles 45, 135, 225 and 315 degrees, in radians."""
    return tuple(np.radians((i - 1) * 90.0 + 45.0) for i in range(1, BEAM_COUNT + 1))


def _check_pitch(pitch: float) -> None:
    if not (0.0 < pitch < np.pi / 2):
        raise ValueError(f"beam pitch must lie in (0, pi/2) rad, got {pitch!r}")


@dataclass(frozen=True)
class BeamGeometry:
    """
    Beam pointing angles relative to the DVL frame.

    Parameters
    ----------
    pitch_angle : float
        Beam pitch from the sensor z axis in radians, shared by all beams.
    yaw_angles : tuple of float
        Yaw of each beam in radians. Defaults to the Janus "x" pattern.
    """

    pitch_angle: float = float(np.radians(DEFAULT_PITCH_DEG))
    yaw_angles: tuple[float, ...] = field(default_factory=janus_yaw_angles)

    def __post_init__(self):
        _check_pitch(self.pitch_angle)
        if len(self.yaw_angles) != BEAM_COUNT:
            raise ValueError(f"expected {BEAM_COUNT} yaw angles, got {len(self.yaw_angles)}")
        object.__setattr__(self, "yaw_angles", tuple(float(a) for a in self.yaw_angles))
        object.__setattr__(self, "pitch_angle", float(self.pitch_angle))

    @property
    def beam_count(self) -> int:
        return BEAM_COUNT

    @classmethod
    def from_degrees(cls, pitch_deg: float = DEFAULT_PITCH_DEG, yaw_deg=None) -> "BeamGeometry":
        if yaw_deg is None:
            return cls(float(np.radians(pitch_deg)))
        return cls(float(np.radians(pitch_deg)), tuple(np.radians(np.asarray(yaw_deg, float))))


def beam_direction(index: int, pitch: float, yaw: float | None = None) -> np.ndarray:
    """
    Unit pointing vector of beam ``index`` (1-based).

    When ``yaw`` is omitted the Janus yaw ``(index - 1) * 90 + 45`` degrees is used.
    """
    if index not in (1, 2, 3, 4):
        raise ValueError(f"beam index must be 1..4, got {index!r}")
    _check_pitch(pitch)
    if yaw is None:
        yaw = janus_yaw_angles()[index - 1]
    return np.array(
        [np.cos(yaw) * np.sin(pitch), np.sin(yaw) * np.sin(pitch), np.cos(pitch)]
    )


def build_transform(geometry: BeamGeometry) -> np.ndarray:
    """
    Beam transformation matrix mapping DVL-frame velocity to along-beam velocity.

    Returns a read-only 4x3 array whose i-th row is the direction of beam i+1.
    """
    T = np.vstack(
        [
            beam_direction(i + 1, geometry.pitch_angle, geometry.yaw_angles[i])
            for i in range(BEAM_COUNT)
        ]
    )
    T.flags.writeable = False
    return T

"""Constant-velocity Kalman smoothing of 2D boxes.

The filter state is (cx, cy, w, h, vx, vy) where (cx, cy) is the
bottom-middle point of the box — the point later reprojected to the ground —
and (vx, vy) its image velocity in px/frame.  Box size follows a random walk.
Noise standard deviations scale with the box height: position 0.05*h,
velocity 0.00625*h per frame, the usual convention for box-space tracking
filters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tracks import TrackPoint

_STATE_DIM = 6
_MEAS_DIM = 4

# Initial covariance inflation: position at 2x measurement std, velocity at
# 10x process std (velocity is unobserved until the second frame).
_INIT_POS_FACTOR = 2.0
_INIT_VEL_FACTOR = 10.0

_MIN_BOX_SIZE = 1e-3


@dataclass(frozen=True)
class NoiseScales:
    """Noise std deviations as fractions of the current box height."""

    position_weight: float = 0.05
    velocity_weight: float = 0.00625


@dataclass(eq=False)
class SmoothedTrackPoint:
    """Filtered image-space state of one track at one frame."""

    frame_index: int
    bottom_middle: np.ndarray          # px
    image_velocity: np.ndarray         # px/s
    box_size: tuple[float, float]      # (width, height) px
    covariance: np.ndarray = field(repr=False)
    interpolated: bool = False         # predict-only frame inside a gap


class _BoxFilter:
    """Plain 6-state linear Kalman filter; one instance per track segment."""

    def __init__(self, measurement: np.ndarray, scales: NoiseScales):
        self.scales = scales
        self.x = np.zeros(_STATE_DIM)
        self.x[:_MEAS_DIM] = measurement
        h = measurement[3]
        pos_std = _INIT_POS_FACTOR * scales.position_weight * h
        vel_std = _INIT_VEL_FACTOR * scales.velocity_weight * h
        self.P = np.diag([pos_std**2] * 4 + [vel_std**2] * 2)
        self.F = np.eye(_STATE_DIM)
        self.F[0, 4] = 1.0
        self.F[1, 5] = 1.0
        self.H = np.zeros((_MEAS_DIM, _STATE_DIM))
        self.H[:, :_MEAS_DIM] = np.eye(_MEAS_DIM)

    def _height(self) -> float:
        return max(float(self.x[3]), _MIN_BOX_SIZE)

    def predict(self):
        h = self._height()
        pos_var = (self.scales.position_weight * h) ** 2
        vel_var = (self.scales.velocity_weight * h) ** 2
        Q = np.diag([pos_var] * 4 + [vel_var] * 2)
        self.x = self.F @ self.x
        self.P = self.F @ self.P @ self.F.T + Q
        self._clamp_size()

    def update(self, measurement: np.ndarray):
        h = max(float(measurement[3]), _MIN_BOX_SIZE)
        meas_var = (self.scales.position_weight * h) ** 2
        R = np.eye(_MEAS_DIM) * meas_var
        innovation = measurement - self.H @ self.x
        S = self.H @ self.P @ self.H.T + R
        K = self.P @ self.H.T @ np.linalg.inv(S)
        self.x = self.x + K @ innovation
        I_KH = np.eye(_STATE_DIM) - K @ self.H
        # Joseph form keeps P symmetric positive semidefinite.
        self.P = I_KH @ self.P @ I_KH.T + K @ R @ K.T
        self._clamp_size()
        return innovation

    def _clamp_size(self):
        self.x[2] = max(self.x[2], _MIN_BOX_SIZE)
        self.x[3] = max(self.x[3], _MIN_BOX_SIZE)


def _measurement(point: TrackPoint) -> np.ndarray:
    left, top, width, height = point.bbox
    return np.array([left + width / 2.0, top + height, width, height])


def _emit(f: _BoxFilter, frame_index: int, fps: float, interpolated: bool) -> SmoothedTrackPoint:
    return SmoothedTrackPoint(
        frame_index=frame_index,
        bottom_middle=f.x[:2].copy(),
        image_velocity=f.x[4:6] * fps,
        box_size=(float(f.x[2]), float(f.x[3])),
        covariance=f.P.copy(),
        interpolated=interpolated,
    )


def smooth_track(
    points: list[TrackPoint],
    fps: float,
    noise_scales: NoiseScales = NoiseScales(),
) -> list[SmoothedTrackPoint]:
    """Filter one track's boxes into smoothed positions and velocities.

    ``points`` must be ordered by frame with strictly increasing indices.
    Missing frames between consecutive observations are filled with
    predict-only states flagged ``interpolated``; callers are expected to
    split tracks at gaps too long to bridge before smoothing.  The first
    output has zero velocity and inflated covariance.
    """
    if not points:
        return []
    frames = [p.frame_index for p in points]
    if any(b <= a for a, b in zip(frames, frames[1:])):
        raise ValueError("track frames must strictly increase")

    f = _BoxFilter(_measurement(points[0]), noise_scales)
    out = [_emit(f, points[0].frame_index, fps, interpolated=False)]
    for prev, point in zip(points, points[1:]):
        for missing in range(prev.frame_index + 1, point.frame_index):
            f.predict()
            out.append(_emit(f, missing, fps, interpolated=True))
        f.predict()
        f.update(_measurement(point))
        out.append(_emit(f, point.frame_index, fps, interpolated=False))
    return out

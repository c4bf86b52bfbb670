"""Polar kinematic state of ground tracks.

Ground velocity is expressed as speed v_r (m/s) and heading v_theta
(degrees); radial acceleration a_r (m/s^2) and angular rate a_theta (deg/s)
are the slopes of ordinary-least-squares lines fitted over a sliding window
of 2w+1 frames.  Headings are unwrapped to a continuous series first, and
held constant while the vehicle is too slow for the direction to mean
anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_V_THETA_FLOOR = 0.3  # m/s; below this the heading is held


@dataclass(frozen=True)
class KinematicsParams:
    w: int  # window half-width in frames; window size is 2w+1
    v_theta_floor: float = DEFAULT_V_THETA_FLOOR

    def __post_init__(self):
        if self.w < 1:
            raise ValueError(f"window half-width must be >= 1, got {self.w}")


@dataclass(eq=False)
class GroundState:
    """Per-frame polar kinematic state of one track."""

    frame_index: int
    time_s: float
    v_r: float        # m/s, >= 0
    v_theta: float    # degrees, unwrapped (continuous over the track)
    a_r: float        # m/s^2; 0 when window_valid is False
    a_theta: float    # deg/s; 0 when window_valid is False
    window_valid: bool


def wrap_degrees(angle):
    """Map an angle (or array) into (-180, 180]."""
    return angle - 360.0 * np.ceil((np.asarray(angle, dtype=float) - 180.0) / 360.0)


def to_polar(v) -> tuple[float, float]:
    """Ground velocity vector -> (v_r, v_theta_raw degrees in (-180, 180]).

    The zero vector maps to (0, 0) by convention.
    """
    vx, vy = float(v[0]), float(v[1])
    v_r = math.hypot(vx, vy)
    if v_r == 0.0:
        return 0.0, 0.0
    return v_r, float(wrap_degrees(math.degrees(math.atan2(vy, vx))))


def unwrap_angles(raw_deg, speeds, floor: float = DEFAULT_V_THETA_FLOOR) -> np.ndarray:
    """Unwrap a raw heading series into a continuous one.

    Consecutive differences are mapped into (-180, 180] by adding multiples
    of 360.  Frames whose speed is below ``floor`` copy the previous
    unwrapped value: near-zero velocities carry no direction information.
    """
    raw = np.asarray(raw_deg, dtype=float)
    v_r = np.asarray(speeds, dtype=float)
    if raw.size == 0:
        raise ValueError("heading series must be nonempty")
    out = np.empty_like(raw)
    out[0] = raw[0]
    for i in range(1, len(raw)):
        if v_r[i] < floor:
            out[i] = out[i - 1]
        else:
            out[i] = out[i - 1] + wrap_degrees(raw[i] - out[i - 1])
    return out


def window_slope(values, t0: int, w: int, fps: float) -> float:
    """OLS slope (per second) of a series over the window [t0-w, t0+w].

    The window must lie entirely inside the series.  Exact for affine input.
    """
    values = np.asarray(values, dtype=float)
    if t0 - w < 0 or t0 + w >= len(values):
        raise ValueError("window extends past the series boundary")
    k = np.arange(-w, w + 1, dtype=float)
    y = values[t0 - w: t0 + w + 1]
    # Times are centered, so the intercept drops out of the slope.
    return float(fps * (k @ y) / (k @ k))


def sliding_slopes(values, w: int, fps: float) -> tuple[np.ndarray, np.ndarray]:
    """OLS slopes at every frame; frames without a full window are invalid.

    Returns (slopes, valid).  Invalid frames carry slope 0.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    slopes = np.zeros(n)
    valid = np.zeros(n, dtype=bool)
    if n >= 2 * w + 1:
        k = np.arange(-w, w + 1, dtype=float)
        denom = float(k @ k)
        # correlate(y, k)[i] = sum_j y[i+j-w] * k[j] = sum_d d * y[i+d]
        core = np.correlate(values, k, mode="valid") * (fps / denom)
        slopes[w: n - w] = core
        valid[w: n - w] = True
    return slopes, valid


def compute_states(
    frame_indices,
    times_s,
    ground_velocities: np.ndarray,
    params: KinematicsParams,
    fps: float,
) -> list[GroundState]:
    """Build the polar state series for one contiguous track segment."""
    v = np.asarray(ground_velocities, dtype=float).reshape(-1, 2)
    v_r = np.linalg.norm(v, axis=1)
    raw = np.degrees(np.arctan2(v[:, 1], v[:, 0]))
    raw = np.where(v_r == 0.0, 0.0, wrap_degrees(raw))
    v_theta = unwrap_angles(raw, v_r, params.v_theta_floor)
    a_r, valid = sliding_slopes(v_r, params.w, fps)
    a_theta, _ = sliding_slopes(v_theta, params.w, fps)
    return [
        GroundState(
            frame_index=int(frame_indices[i]),
            time_s=float(times_s[i]),
            v_r=float(v_r[i]),
            v_theta=float(v_theta[i]),
            a_r=float(a_r[i]) if valid[i] else 0.0,
            a_theta=float(a_theta[i]) if valid[i] else 0.0,
            window_valid=bool(valid[i]),
        )
        for i in range(len(v_r))
    ]

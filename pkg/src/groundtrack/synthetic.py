"""Scripted scenes: scripted ground trajectories projected through a camera
into pixel-space tracks, with optional Gaussian pixel noise.

Vehicles follow piecewise-linear waypoint paths (constant speed per segment)
as oriented cuboids on the ground plane.  Each frame, the eight cuboid
corners are projected into the image; their bounding box and convex hull
become the detection box and contour.  Frames where the vehicle leaves the
camera frustum are omitted, mimicking out-of-view gaps.  Everything is
deterministic per (scenario, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calibration import CameraModel
from .events import EventRecord
from .evaluation import GroundTruthEvent
from .geometry import convex_hull
from .tracks import TrackPoint, VehicleClass


@dataclass(frozen=True, eq=False)
class ScriptedVehicle:
    """One scripted vehicle: a cuboid following timed ground waypoints.

    ``waypoints`` is an (n, 3) array of (time_s, x_m, y_m) rows with strictly
    increasing times; the waypoint position is the footprint center.
    ``dims`` is (length, width, height) in meters.
    """

    track_id: int
    waypoints: np.ndarray
    dims: tuple[float, float, float] = (4.0, 1.8, 1.5)
    class_label: VehicleClass = VehicleClass.CAR

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float).reshape(-1, 3)
        if len(wp) < 2:
            raise ValueError("a scripted vehicle needs at least two waypoints")
        if np.any(np.diff(wp[:, 0]) <= 0):
            raise ValueError("waypoint times must strictly increase")
        if min(self.dims) <= 0:
            raise ValueError("vehicle dimensions must be positive")
        wp.setflags(write=False)
        object.__setattr__(self, "waypoints", wp)


@dataclass(eq=False)
class SyntheticScenario:
    camera: CameraModel
    fps: float
    vehicles: list[ScriptedVehicle]
    noise_sigma_px: float = 0.0
    emit_contours: bool = True
    expected_events: list[EventRecord] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Path scripting
# ---------------------------------------------------------------------------

class PathBuilder:
    """Compose a waypoint path from straights, arcs, speed ramps and holds.

    Curved and accelerating sections are densely sampled so the
    piecewise-linear waypoint interpolation tracks them closely.
    """

    def __init__(self, t0: float, position, heading_deg: float, sample_dt: float = 0.1):
        self.t = float(t0)
        self.pos = np.asarray(position, dtype=float).copy()
        self.heading = math.radians(heading_deg)
        self.sample_dt = sample_dt
        self._points = [(self.t, self.pos[0], self.pos[1])]

    def _append(self, t, pos):
        self.t = float(t)
        self.pos = np.asarray(pos, dtype=float).copy()
        self._points.append((self.t, self.pos[0], self.pos[1]))

    def straight(self, distance: float, speed: float) -> "PathBuilder":
        direction = np.array([math.cos(self.heading), math.sin(self.heading)])
        self._append(self.t + distance / speed, self.pos + distance * direction)
        return self

    def hold(self, duration: float) -> "PathBuilder":
        self._append(self.t + duration, self.pos)
        return self

    def arc(self, radius: float, angle_deg: float, speed: float) -> "PathBuilder":
        """Circular arc at constant speed; positive angle turns left."""
        total = math.radians(angle_deg)
        sign = 1.0 if total >= 0 else -1.0
        center = self.pos + radius * np.array(
            [math.cos(self.heading + sign * math.pi / 2), math.sin(self.heading + sign * math.pi / 2)]
        )
        duration = abs(total) * radius / speed
        steps = max(2, int(math.ceil(duration / self.sample_dt)))
        phi0 = math.atan2(self.pos[1] - center[1], self.pos[0] - center[0])
        for i in range(1, steps + 1):
            frac = i / steps
            phi = phi0 + total * frac
            pos = center + radius * np.array([math.cos(phi), math.sin(phi)])
            self._append(self.t + duration / steps, pos)
        self.heading += total
        return self

    def ramp(self, v0: float, v1: float, duration: float) -> "PathBuilder":
        """Speed changes linearly from v0 to v1 while heading stays fixed."""
        direction = np.array([math.cos(self.heading), math.sin(self.heading)])
        steps = max(2, int(math.ceil(duration / self.sample_dt)))
        start_pos = self.pos.copy()
        start_t = self.t
        for i in range(1, steps + 1):
            tau = duration * i / steps
            dist = v0 * tau + 0.5 * (v1 - v0) * tau**2 / duration
            self._append(start_t + tau, start_pos + dist * direction)
        return self

    def waypoints(self) -> np.ndarray:
        return np.array(self._points)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def _headings_along(waypoints: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Per-sample heading from the active waypoint segment, holding the last
    moving direction through stationary stretches."""
    seg_dirs = np.diff(waypoints[:, 1:3], axis=0)
    seg_len = np.linalg.norm(seg_dirs, axis=1)
    idx = np.clip(np.searchsorted(waypoints[:, 0], times, side="right") - 1, 0, len(seg_dirs) - 1)
    headings = np.zeros(len(times))
    current = None
    moving = seg_len > 1e-9
    first_moving = np.flatnonzero(moving)
    for k, i in enumerate(idx):
        if moving[i]:
            current = math.atan2(seg_dirs[i, 1], seg_dirs[i, 0])
        elif current is None:
            # Stationary from the start: face the first moving segment.
            j = first_moving[0] if len(first_moving) else 0
            current = math.atan2(seg_dirs[j, 1], seg_dirs[j, 0]) if len(first_moving) else 0.0
        headings[k] = current
    return headings


def _cuboid_corners(center: np.ndarray, heading: float, dims) -> np.ndarray:
    """World (8, 3) corners of the vehicle cuboid, bottom four first."""
    length, width, height = dims
    e = np.array([math.cos(heading), math.sin(heading)])
    n = np.array([-e[1], e[0]])
    half_l, half_w = length / 2.0, width / 2.0
    base = [
        center + half_l * e + half_w * n,
        center + half_l * e - half_w * n,
        center - half_l * e - half_w * n,
        center - half_l * e + half_w * n,
    ]
    bottom = np.array([[p[0], p[1], 0.0] for p in base])
    top = bottom + np.array([0.0, 0.0, height])
    return np.vstack([bottom, top])


def _project_corners(camera: CameraModel, corners_m: np.ndarray) -> np.ndarray | None:
    """(n, 2) pixel projections, or None when any corner is behind the camera."""
    pts = corners_m / camera.scale
    homog = np.column_stack([pts, np.ones(len(pts))])
    img = homog @ camera.P.T
    if np.any(img[:, 2] <= 1e-9):
        return None
    return img[:, :2] / img[:, 2:3]


def footprint_corners(vehicle: ScriptedVehicle, time_s: float) -> np.ndarray:
    """Scripted ground footprint (4, 2) of a vehicle at a given time."""
    wp = vehicle.waypoints
    pos = np.array([
        np.interp(time_s, wp[:, 0], wp[:, 1]),
        np.interp(time_s, wp[:, 0], wp[:, 2]),
    ])
    heading = _headings_along(wp, np.array([time_s]))[0]
    return _cuboid_corners(pos, heading, vehicle.dims)[:4, :2]


def generate_scenario(scenario: SyntheticScenario, seed: int) -> list[TrackPoint]:
    """Render a scenario into per-frame 2D track observations.

    Output is grouped by track and ordered by frame.  With zero noise the
    boxes are the exact projections of the scripted cuboids; with noise,
    every box corner and contour vertex is perturbed with N(0, sigma^2)
    pixels, reproducibly per seed.
    """
    rng = np.random.default_rng(seed)
    fps = scenario.fps
    camera = scenario.camera
    width, height = camera.image_size
    points: list[TrackPoint] = []

    for vehicle in sorted(scenario.vehicles, key=lambda v: v.track_id):
        wp = vehicle.waypoints
        first = int(math.ceil(wp[0, 0] * fps - 1e-9))
        last = int(math.floor(wp[-1, 0] * fps + 1e-9))
        times = np.arange(first, last + 1) / fps
        xs = np.interp(times, wp[:, 0], wp[:, 1])
        ys = np.interp(times, wp[:, 0], wp[:, 2])
        headings = _headings_along(wp, times)

        for frame, time_s, x, y, heading in zip(
            range(first, last + 1), times, xs, ys, headings
        ):
            corners = _cuboid_corners(np.array([x, y]), heading, vehicle.dims)
            img = _project_corners(camera, corners)
            if img is None:
                continue
            left, top = img.min(axis=0)
            right, bottom = img.max(axis=0)
            cx, cy = (left + right) / 2.0, (top + bottom) / 2.0
            if not (0 <= cx < width and 0 <= cy < height):
                continue

            if scenario.noise_sigma_px > 0:
                d_left, d_top, d_right, d_bottom = rng.normal(
                    0.0, scenario.noise_sigma_px, 4
                )
                left, top = left + d_left, top + d_top
                right, bottom = right + d_right, bottom + d_bottom
            box_w = max(right - left, 1.0)
            box_h = max(bottom - top, 1.0)

            contour = None
            if scenario.emit_contours:
                contour = convex_hull(img)
                if scenario.noise_sigma_px > 0:
                    contour = contour + rng.normal(
                        0.0, scenario.noise_sigma_px, contour.shape
                    )

            points.append(
                TrackPoint(
                    frame_index=frame,
                    time_s=time_s,
                    track_id=vehicle.track_id,
                    class_label=vehicle.class_label,
                    confidence=1.0,
                    bbox=(float(left), float(top), float(box_w), float(box_h)),
                    contour=contour,
                )
            )
    return points


def truth_annotations(
    scenario: SyntheticScenario, video_id: str = "synthetic"
) -> list[GroundTruthEvent]:
    """Ground-truth annotations for the scenario's expected events.

    Per-frame boxes come from a noise-free rendering, so they are the exact
    projections of the scripted vehicles.
    """
    clean = SyntheticScenario(
        camera=scenario.camera,
        fps=scenario.fps,
        vehicles=scenario.vehicles,
        noise_sigma_px=0.0,
        emit_contours=False,
        expected_events=scenario.expected_events,
    )
    tracks: dict[int, dict[int, tuple]] = {}
    for p in generate_scenario(clean, seed=0):
        tracks.setdefault(p.track_id, {})[p.frame_index] = p.bbox
    annotations = []
    for ev in scenario.expected_events:
        frames = {
            f: box
            for f, box in tracks.get(ev.track_id, {}).items()
            if ev.t_s * scenario.fps - 1e-9 <= f <= ev.t_e * scenario.fps + 1e-9
        }
        annotations.append(
            GroundTruthEvent(
                video_id=video_id, type=ev.type, t_s=ev.t_s, t_e=ev.t_e, frames=frames
            )
        )
    return annotations

"""End-to-end pipeline: tracks -> smoothing -> ground projection ->
kinematics -> event and collision detection.

Tracks are independent: each is smoothed and analyzed on its own, optionally
on worker threads, and results are reassembled in track order so the output
never depends on scheduling.  Collision checking runs afterwards over the
per-frame union of the tracks' ground observations.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calibration import CameraModel, reproject_points_to_ground
from .collision import (
    DEFAULT_HORIZON_S,
    DEFAULT_STEP_S,
    CollisionAlert,
    CollisionMonitor,
)
from .errors import GroundTrackError
from .events import DetectorParams, EventRecord, detect_events
from .geometry import (
    DEFAULT_V_ORIENT_MIN,
    DEFAULT_VEHICLE_WIDTH_M,
    GroundObservation,
    axis_aligned_fallback_footprint,
    build_3d_bbox,
    ground_velocities,
)
from .kinematics import DEFAULT_V_THETA_FLOOR, KinematicsParams, compute_states
from .smoothing import NoiseScales, smooth_track
from .tracks import TrackPoint

DEFAULT_MAX_TRACK_GAP_FRAMES = 10


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the pipeline, in SI units.

    ``w`` (the kinematics window half-width in frames) defaults to half a
    second of frames when left as None.
    """

    fps: float = 10.0
    detector: DetectorParams = field(default_factory=DetectorParams)
    w: int | None = None
    v_theta_floor: float = DEFAULT_V_THETA_FLOOR
    smoothing: NoiseScales = field(default_factory=NoiseScales)
    collision_horizon_s: float = DEFAULT_HORIZON_S
    collision_step_s: float = DEFAULT_STEP_S
    max_track_gap_frames: int = DEFAULT_MAX_TRACK_GAP_FRAMES
    v_orient_min: float = DEFAULT_V_ORIENT_MIN
    default_vehicle_width_m: float = DEFAULT_VEHICLE_WIDTH_M
    workers: int = 1

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.w is not None and self.w < 1:
            raise ValueError("window half-width must be >= 1")
        for name in ("collision_horizon_s", "collision_step_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_track_gap_frames < 0:
            raise ValueError("max_track_gap_frames must be >= 0")

    @property
    def window_halfwidth(self) -> int:
        return self.w if self.w is not None else max(1, math.ceil(0.5 * self.fps))

    @property
    def kinematics(self) -> KinematicsParams:
        return KinematicsParams(w=self.window_halfwidth, v_theta_floor=self.v_theta_floor)

    @staticmethod
    def from_dict(data: dict) -> "PipelineConfig":
        """Build a config from the flat key/value form of the config file."""
        data = dict(data)
        detector_kwargs = {
            name: data.pop(name)
            for name in DetectorParams.__dataclass_fields__
            if name in data
        }
        smoothing_kwargs = {}
        if "smoothing_position_weight" in data:
            smoothing_kwargs["position_weight"] = data.pop("smoothing_position_weight")
        if "smoothing_velocity_weight" in data:
            smoothing_kwargs["velocity_weight"] = data.pop("smoothing_velocity_weight")
        known = {
            name: data.pop(name)
            for name in (
                "fps", "w", "v_theta_floor", "collision_horizon_s", "collision_step_s",
                "max_track_gap_frames", "v_orient_min", "default_vehicle_width_m",
                "workers",
            )
            if name in data
        }
        if data:
            raise ValueError(f"unknown config keys: {sorted(data)}")
        return PipelineConfig(
            detector=DetectorParams(**detector_kwargs),
            smoothing=NoiseScales(**smoothing_kwargs),
            **known,
        )

    def to_dict(self) -> dict:
        out = {"fps": self.fps}
        for name in DetectorParams.__dataclass_fields__:
            out[name] = getattr(self.detector, name)
        out.update(
            w=self.window_halfwidth,
            v_theta_floor=self.v_theta_floor,
            smoothing_position_weight=self.smoothing.position_weight,
            smoothing_velocity_weight=self.smoothing.velocity_weight,
            collision_horizon_s=self.collision_horizon_s,
            collision_step_s=self.collision_step_s,
            max_track_gap_frames=self.max_track_gap_frames,
            v_orient_min=self.v_orient_min,
            default_vehicle_width_m=self.default_vehicle_width_m,
            workers=self.workers,
        )
        return out


def load_config(path: str | Path) -> PipelineConfig:
    return PipelineConfig.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Track segmentation
# ---------------------------------------------------------------------------

def split_segments(points: list[TrackPoint], max_gap_frames: int) -> list[list[TrackPoint]]:
    """Split one track at frame gaps larger than ``max_gap_frames``.

    Kinematic windows across long occlusions are meaningless, so each side
    becomes an independent segment.
    """
    if not points:
        return []
    segments = [[points[0]]]
    for prev, point in zip(points, points[1:]):
        if point.frame_index - prev.frame_index > max_gap_frames:
            segments.append([point])
        else:
            segments[-1].append(point)
    return segments


# ---------------------------------------------------------------------------
# Per-track processing
# ---------------------------------------------------------------------------

def _contiguous_runs(frames: np.ndarray) -> list[slice]:
    if len(frames) == 0:
        return []
    breaks = np.flatnonzero(np.diff(frames) != 1) + 1
    bounds = [0, *breaks.tolist(), len(frames)]
    return [slice(a, b) for a, b in zip(bounds, bounds[1:])]


def _segment_observations(
    camera: CameraModel, config: PipelineConfig, segment: list[TrackPoint]
) -> list[GroundObservation]:
    """Ground observations for one gap-free track segment.

    Smoothing fills interior gaps; frames whose geometry fails (reprojection
    beyond the horizon or behind the camera) are dropped.
    """
    smoothed = smooth_track(segment, config.fps, config.smoothing)
    n = len(smoothed)
    bottoms = np.array([s.bottom_middle for s in smoothed])
    velocities = np.array([s.image_velocity for s in smoothed])
    positions, pos_ok = reproject_points_to_ground(camera, bottoms)
    g_velocities, vel_ok = ground_velocities(camera, bottoms, velocities, 1.0 / config.fps)
    ok = pos_ok & vel_ok

    contours = {p.frame_index: p.contour for p in segment}
    observations: list[GroundObservation] = []
    prev_orientation: np.ndarray | None = None
    for i in range(n):
        if not ok[i]:
            continue
        s = smoothed[i]
        gv = g_velocities[i]
        speed = float(np.linalg.norm(gv))
        orientation_valid = speed >= config.v_orient_min
        if orientation_valid:
            motion_dir = gv / speed
            prev_orientation = motion_dir
        else:
            motion_dir = prev_orientation

        contour = contours.get(s.frame_index)
        fallback = False
        try:
            if contour is not None and motion_dir is not None:
                box = build_3d_bbox(
                    camera, contour, motion_dir, config.default_vehicle_width_m
                )
                footprint = box.footprint
                fallback = box.fallback
            else:
                cx, cy = s.bottom_middle
                half_w = s.box_size[0] / 2.0
                footprint = axis_aligned_fallback_footprint(
                    camera, (cx - half_w, cy), (cx + half_w, cy),
                    config.default_vehicle_width_m,
                )
                fallback = contour is not None
        except GroundTrackError:
            continue  # untrustworthy geometry; treat like an out-of-view frame

        observations.append(
            GroundObservation(
                frame_index=s.frame_index,
                time_s=s.frame_index / config.fps,
                position=positions[i],
                ground_velocity=gv,
                footprint=footprint,
                orientation_valid=orientation_valid,
                footprint_fallback=fallback,
            )
        )
    return observations


def process_track(
    camera: CameraModel,
    config: PipelineConfig,
    track_id: int,
    points: list[TrackPoint],
) -> tuple[list[EventRecord], list[GroundObservation]]:
    """Events and ground observations of one track."""
    events: list[EventRecord] = []
    observations: list[GroundObservation] = []
    for segment in split_segments(points, config.max_track_gap_frames):
        obs = _segment_observations(camera, config, segment)
        observations.extend(obs)
        if len(segment) < 2:
            continue  # cannot estimate speed; passed through without events
        frames = np.array([o.frame_index for o in obs])
        for run in _contiguous_runs(frames):
            chunk = obs[run]
            states = compute_states(
                [o.frame_index for o in chunk],
                [o.time_s for o in chunk],
                np.array([o.ground_velocity for o in chunk]).reshape(-1, 2),
                config.kinematics,
                config.fps,
            )
            events.extend(detect_events(states, config.detector, track_id))
    return events, observations


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------

def run_pipeline(
    config: PipelineConfig,
    camera: CameraModel,
    tracks: list[TrackPoint],
) -> tuple[list[EventRecord], list[CollisionAlert]]:
    """Run the full chain over parsed tracks.

    Deterministic: identical inputs yield identical outputs regardless of
    worker count.  Events are ordered by (end time, track, start time);
    collision alerts by time.
    """
    by_track: dict[int, list[TrackPoint]] = {}
    for p in tracks:
        by_track.setdefault(p.track_id, []).append(p)
    for track_id, pts in by_track.items():
        frames = [p.frame_index for p in pts]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"track {track_id}: frame indices must strictly increase")

    ordered_ids = sorted(by_track)
    jobs = [(tid, by_track[tid]) for tid in ordered_ids]
    if config.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(
                pool.map(lambda job: process_track(camera, config, *job), jobs)
            )
    else:
        results = [process_track(camera, config, *job) for job in jobs]

    events: list[EventRecord] = []
    frame_obs: dict[int, list[tuple[int, GroundObservation]]] = {}
    for (track_id, _), (track_events, observations) in zip(jobs, results):
        events.extend(track_events)
        for o in observations:
            frame_obs.setdefault(o.frame_index, []).append((track_id, o))
    events.sort(key=lambda ev: (ev.t_e, ev.track_id, ev.t_s, ev.type.value))

    alerts: list[CollisionAlert] = []
    if len(ordered_ids) > 1:
        monitor = CollisionMonitor(config.collision_horizon_s, config.collision_step_s)
        for frame in sorted(frame_obs):
            entries = sorted(frame_obs[frame], key=lambda e: e[0])
            if len(entries) < 2:
                monitor.update([], [])
                continue
            alerts.extend(
                monitor.update([o for _, o in entries], [tid for tid, _ in entries])
            )
    return events, alerts

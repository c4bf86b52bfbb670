"""Shared fixtures: reference cameras and the standard scripted scene."""

from __future__ import annotations

import math

import numpy as np
import pytest

from groundtrack.calibration import CameraModel, camera_from_krt
from groundtrack.events import EventRecord, EventType
from groundtrack.synthetic import PathBuilder, ScriptedVehicle, SyntheticScenario

IMAGE_SIZE = (1920, 1080)
FOCAL_PX = 1200.0
CAMERA_HEIGHT_M = 8.0
CAMERA_PITCH_DEG = 25.0


def overhead_camera(
    height_m: float = CAMERA_HEIGHT_M,
    pitch_deg: float = CAMERA_PITCH_DEG,
    focal_px: float = FOCAL_PX,
) -> CameraModel:
    """Surveillance camera at (0, 0, h) looking along +Y, pitched down."""
    a = math.radians(pitch_deg)
    # Camera axes in world coordinates: x right, z forward-down, y image-down.
    R = np.array([
        [1.0, 0.0, 0.0],
        [0.0, -math.sin(a), -math.cos(a)],
        [0.0, math.cos(a), -math.sin(a)],
    ])
    t = -R @ np.array([0.0, 0.0, height_m])
    K = np.array([
        [focal_px, 0.0, IMAGE_SIZE[0] / 2.0],
        [0.0, focal_px, IMAGE_SIZE[1] / 2.0],
        [0.0, 0.0, 1.0],
    ])
    return camera_from_krt(K, R, t, IMAGE_SIZE)


@pytest.fixture(scope="session")
def camera() -> CameraModel:
    return overhead_camera()


CAR_DIMS = (4.2, 1.8, 1.5)


def standard_scene(noise_sigma_px: float = 0.0, emit_contours: bool = True) -> SyntheticScenario:
    """The reference scripted scene: 3 left turns, 2 right turns, 1 U-turn,
    2 starts, 2 stops, each vehicle alone in its time slot."""
    cam = overhead_camera()
    fps = 10.0
    vehicles: list[ScriptedVehicle] = []
    events: list[EventRecord] = []
    slot = 12.0

    def turn(track_id, t0, x0, lead_m, radius, angle_deg, speed, tail_m):
        path = PathBuilder(t0, (x0, 12.0), 90.0)
        path.straight(lead_m, speed)
        arc_start = path.t
        path.arc(radius, angle_deg, speed)
        arc_end = path.t
        path.straight(tail_m, speed)
        vehicles.append(ScriptedVehicle(track_id, path.waypoints(), CAR_DIMS))
        if angle_deg >= 135.0 or angle_deg <= -135.0:
            kind = EventType.U_TURN
        elif angle_deg > 0:
            kind = EventType.TURN_LEFT
        else:
            kind = EventType.TURN_RIGHT
        events.append(EventRecord(kind, track_id, arc_start, arc_end, theta=angle_deg))

    def start(track_id, t0, x0, y0, hold_s, v1, ramp_s, cruise_s):
        path = PathBuilder(t0, (x0, y0), 90.0)
        path.hold(hold_s)
        ramp_start = path.t
        path.ramp(0.0, v1, ramp_s)
        ramp_end = path.t
        path.straight(v1 * cruise_s, v1)
        vehicles.append(ScriptedVehicle(track_id, path.waypoints(), CAR_DIMS))
        events.append(
            EventRecord(EventType.START, track_id, ramp_start, ramp_end, v_start=0.0, v_end=v1)
        )

    def stop(track_id, t0, x0, y0, v0, cruise_s, ramp_s, hold_s):
        path = PathBuilder(t0, (x0, y0), -90.0)
        path.straight(v0 * cruise_s, v0)
        ramp_start = path.t
        path.ramp(v0, 0.0, ramp_s)
        ramp_end = path.t
        path.hold(hold_s)
        vehicles.append(ScriptedVehicle(track_id, path.waypoints(), CAR_DIMS))
        events.append(
            EventRecord(EventType.STOP, track_id, ramp_start, ramp_end, v_start=v0, v_end=0.0)
        )

    turn(1, 0 * slot, 8.0, 16.0, 8.0, 90.0, 6.0, 10.0)
    turn(2, 1 * slot, 0.0, 14.0, 7.0, 90.0, 6.0, 8.0)
    turn(3, 2 * slot, -8.0, 12.0, 6.0, 90.0, 5.0, 6.0)
    turn(4, 3 * slot, -8.0, 16.0, 8.0, -90.0, 6.0, 10.0)
    turn(5, 4 * slot, 0.0, 12.0, 6.0, -90.0, 5.0, 8.0)
    turn(6, 5 * slot, 6.0, 12.0, 5.0, 180.0, 4.0, 10.0)
    start(7, 6 * slot, -6.0, 16.0, 2.5, 8.0, 4.0, 1.5)
    start(8, 7 * slot, 4.0, 14.0, 2.5, 7.0, 3.5, 2.0)
    stop(9, 8 * slot, -2.0, 44.0, 8.0, 3.0, 3.0, 2.0)
    stop(10, 9 * slot, 8.0, 44.0, 7.0, 3.0, 3.5, 2.0)

    return SyntheticScenario(
        camera=cam,
        fps=fps,
        vehicles=vehicles,
        noise_sigma_px=noise_sigma_px,
        emit_contours=emit_contours,
        expected_events=events,
    )


@pytest.fixture(scope="session")
def scene() -> SyntheticScenario:
    return standard_scene()

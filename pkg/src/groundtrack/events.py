"""Trigger-driven detection of the five vehicle actions.

Two independent frame-level state machines run over the polar state series:
a turning machine gated on the angular rate and a linear machine gated on the
radial acceleration.  Each machine has a strict trigger condition that opens
an event and a looser border condition that delimits it: the event spans the
maximal contiguous run of border-true frames containing a trigger frame.
Valid events are then classified and scored.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .kinematics import GroundState, wrap_degrees


class EventType(str, Enum):
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    U_TURN = "u_turn"
    START = "start"
    STOP = "stop"


TURNING_TYPES = (EventType.TURN_LEFT, EventType.TURN_RIGHT, EventType.U_TURN)
LINEAR_TYPES = (EventType.START, EventType.STOP)


@dataclass(frozen=True)
class DetectorParams:
    """The eleven detection thresholds, in SI units and degrees.

    Defaults are common-sense values for road vehicles; every field can be
    overridden from the config file under exactly these names.
    """

    a_theta_trigger: float = 10.0  # deg/s
    a_theta_border: float = 4.0    # deg/s
    v_turn_min: float = 0.5        # m/s
    t_turn_min: float = 1.0        # s
    theta_min: float = 30.0        # deg
    theta_max: float = 135.0       # deg
    a_r_trigger: float = 1.0       # m/s^2
    a_r_border: float = 0.4        # m/s^2
    t_linear_min: float = 1.0      # s
    v_stop_max: float = 0.3        # m/s
    v_move_min: float = 1.0        # m/s

    def __post_init__(self):
        if self.a_theta_trigger <= self.a_theta_border:
            raise ValueError("a_theta_trigger must exceed a_theta_border")
        if self.a_r_trigger <= self.a_r_border:
            raise ValueError("a_r_trigger must exceed a_r_border")
        if not 0.0 < self.theta_min < self.theta_max <= 180.0:
            raise ValueError("need 0 < theta_min < theta_max <= 180")
        if self.v_stop_max >= self.v_move_min:
            raise ValueError("v_stop_max must be below v_move_min")
        for name in ("t_turn_min", "t_linear_min", "v_turn_min"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(eq=False)
class EventRecord:
    """One detected vehicle action.

    ``theta`` is set for turning events only; ``v_start``/``v_end`` for
    linear events only.
    """

    type: EventType
    track_id: int
    t_s: float
    t_e: float
    theta: float | None = None
    v_start: float | None = None
    v_end: float | None = None
    score: float = 0.0

    def __post_init__(self):
        if self.t_e <= self.t_s:
            raise ValueError("event must end after it starts")


def _intervals_from_masks(border: np.ndarray, trigger: np.ndarray) -> list[tuple[int, int]]:
    """Maximal contiguous border-true runs that contain a trigger frame."""
    border = np.asarray(border, dtype=bool)
    trigger = np.asarray(trigger, dtype=bool)
    if border.shape != trigger.shape:
        raise ValueError("border and trigger masks must have equal length")
    if np.any(trigger & ~border):
        raise ValueError("trigger condition must imply the border condition")
    padded = np.concatenate([[False], border, [False]]).astype(int)
    diff = np.diff(padded)
    starts = np.flatnonzero(diff == 1)
    ends = np.flatnonzero(diff == -1) - 1
    return [(int(s), int(e)) for s, e in zip(starts, ends) if trigger[s: e + 1].any()]


def run_trigger_machine(
    series: Sequence,
    trigger: Callable,
    border: Callable,
) -> list[tuple[int, int]]:
    """Run one trigger/border machine over a frame series.

    ``trigger`` and ``border`` are frame predicates, with border the looser
    of the two (border must hold wherever trigger does).  When a trigger
    fires, the event start backtracks to the first frame of the surrounding
    border-true run and the event stays open until the border fails; an open
    event at the end of the series closes there.  Returned index intervals
    are inclusive and never overlap.
    """
    border_mask = np.fromiter((bool(border(f)) for f in series), dtype=bool, count=len(series))
    trigger_mask = np.fromiter((bool(trigger(f)) for f in series), dtype=bool, count=len(series))
    return _intervals_from_masks(border_mask, trigger_mask)


def _turning_masks(series: list[GroundState], params: DetectorParams):
    a_theta = np.array([s.a_theta for s in series])
    v_r = np.array([s.v_r for s in series])
    valid = np.array([s.window_valid for s in series])
    trigger = valid & (np.abs(a_theta) >= params.a_theta_trigger) & (v_r >= params.v_turn_min)
    border = valid & (np.abs(a_theta) >= params.a_theta_border) & (v_r >= params.v_turn_min)
    return border, trigger


def _linear_masks(series: list[GroundState], params: DetectorParams):
    a_r = np.array([s.a_r for s in series])
    valid = np.array([s.window_valid for s in series])
    trigger = valid & (np.abs(a_r) >= params.a_r_trigger)
    border = valid & (np.abs(a_r) >= params.a_r_border)
    return border, trigger


def detect_turning(
    series: list[GroundState],
    params: DetectorParams,
    track_id: int = -1,
) -> list[EventRecord]:
    """Detect turn-left / turn-right / U-turn events on one state series."""
    if not series:
        return []
    border, trigger = _turning_masks(series, params)
    events = []
    for s, e in _intervals_from_masks(border, trigger):
        t_s, t_e = series[s].time_s, series[e].time_s
        if t_e - t_s < params.t_turn_min:
            continue
        theta = float(wrap_degrees(series[e].v_theta - series[s].v_theta))
        if abs(theta) <= params.theta_min:
            continue
        if theta >= params.theta_max or theta <= -params.theta_max:
            kind = EventType.U_TURN
        elif theta > 0:
            kind = EventType.TURN_LEFT
        else:
            kind = EventType.TURN_RIGHT
        record = EventRecord(type=kind, track_id=track_id, t_s=t_s, t_e=t_e, theta=theta)
        record.score = score_event(record, params)
        events.append(record)
    return events


def detect_linear(
    series: list[GroundState],
    params: DetectorParams,
    track_id: int = -1,
) -> list[EventRecord]:
    """Detect start / stop events on one state series."""
    if not series:
        return []
    border, trigger = _linear_masks(series, params)
    events = []
    for s, e in _intervals_from_masks(border, trigger):
        t_s, t_e = series[s].time_s, series[e].time_s
        v_s, v_e = series[s].v_r, series[e].v_r
        if t_e - t_s < params.t_linear_min:
            continue
        if min(v_s, v_e) > params.v_stop_max or max(v_s, v_e) < params.v_move_min:
            continue
        if v_s <= params.v_stop_max and v_e >= params.v_move_min:
            kind = EventType.START
        elif v_s >= params.v_move_min and v_e <= params.v_stop_max:
            kind = EventType.STOP
        else:
            continue  # valid but unclassifiable; discard
        record = EventRecord(
            type=kind, track_id=track_id, t_s=t_s, t_e=t_e, v_start=v_s, v_end=v_e
        )
        record.score = score_event(record, params)
        events.append(record)
    return events


def score_event(event: EventRecord, params: DetectorParams) -> float:
    """Shallow confidence score in [0, 1].

    Turns score highest at 90 degrees, U-turns at 180; starts and stops score
    by how close the slow endpoint is to standstill.
    """
    if event.type in (EventType.TURN_LEFT, EventType.TURN_RIGHT):
        raw = 1.0 - abs(abs(event.theta) - 90.0) / 90.0
    elif event.type is EventType.U_TURN:
        raw = abs(event.theta) / 180.0
    elif event.type is EventType.START:
        raw = 1.0 - event.v_start / params.v_stop_max
    else:  # STOP
        raw = 1.0 - event.v_end / params.v_stop_max
    return float(min(1.0, max(0.0, raw)))


def detect_events(
    series: list[GroundState],
    params: DetectorParams,
    track_id: int = -1,
) -> list[EventRecord]:
    """Run both machines over one series; results ordered by end time."""
    events = detect_turning(series, params, track_id)
    events += detect_linear(series, params, track_id)
    events.sort(key=lambda ev: (ev.t_e, ev.t_s, ev.type.value))
    return events

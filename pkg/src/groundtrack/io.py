"""Line-oriented input/output.

Track records come one per line, either CSV
    frame,track_id,class,confidence,left,top,width,height[,contour=x0:y0;x1:y1;...]
or a JSON object per line with the same field names.  Events, collision
alerts and annotations are JSON-lines.  All writers are deterministic:
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .calibration import load_calibration
from .errors import TrackParseError
from .evaluation import GroundTruthEvent
from .events import EventRecord, EventType, TURNING_TYPES
from .collision import CollisionAlert
from .synthetic import ScriptedVehicle, SyntheticScenario
from .tracks import TrackPoint, VehicleClass

_CSV_FIELDS = 8


def _parse_contour_text(text: str) -> np.ndarray:
    pairs = [v for v in text.split(";") if v]
    return np.array([[float(a), float(b)] for a, b in (p.split(":") for p in pairs)])


def _parse_line(line: str, fps: float) -> TrackPoint:
    if line.lstrip().startswith("{"):
        rec = json.loads(line)
        contour = rec.get("contour")
        if isinstance(contour, str):
            contour = _parse_contour_text(contour)
        elif contour is not None:
            contour = np.asarray(contour, dtype=float)
        frame = int(rec["frame"])
        return TrackPoint(
            frame_index=frame,
            time_s=frame / fps,
            track_id=int(rec["track_id"]),
            class_label=VehicleClass(rec["class"]),
            confidence=float(rec["confidence"]),
            bbox=(
                float(rec["left"]), float(rec["top"]),
                float(rec["width"]), float(rec["height"]),
            ),
            contour=contour,
        )

    parts = [p.strip() for p in line.split(",")]
    if len(parts) < _CSV_FIELDS:
        raise ValueError(f"expected {_CSV_FIELDS} comma-separated fields, got {len(parts)}")
    contour = None
    if len(parts) > _CSV_FIELDS:
        extra = ",".join(parts[_CSV_FIELDS:])
        if not extra.startswith("contour="):
            raise ValueError(f"unexpected trailing fields: {extra!r}")
        contour = _parse_contour_text(extra[len("contour="):])
    frame = int(parts[0])
    return TrackPoint(
        frame_index=frame,
        time_s=frame / fps,
        track_id=int(parts[1]),
        class_label=VehicleClass(parts[2]),
        confidence=float(parts[3]),
        bbox=(float(parts[4]), float(parts[5]), float(parts[6]), float(parts[7])),
        contour=contour,
    )


def parse_tracks(stream: Iterable[str] | str | Path, fps: float) -> list[TrackPoint]:
    """Parse track records; returns them ordered by (track_id, frame_index).

    ``stream`` is a path, a text blob, or an iterable of lines.  All
    problems are collected and raised together as TrackParseError, each
    message carrying its line number; duplicated (track_id, frame_index)
    pairs are rejected naming both offending lines.
    """
    if isinstance(stream, Path):
        lines = stream.read_text().splitlines()
    elif isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = [ln.rstrip("\n") for ln in stream]

    points: list[TrackPoint] = []
    problems: list[str] = []
    seen: dict[tuple[int, int], int] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            point = _parse_line(line, fps)
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            problems.append(f"line {lineno}: {exc}")
            continue
        key = (point.track_id, point.frame_index)
        if key in seen:
            problems.append(
                f"line {lineno}: duplicate of line {seen[key]} "
                f"(track {point.track_id}, frame {point.frame_index})"
            )
            continue
        seen[key] = lineno
        points.append(point)
    if problems:
        raise TrackParseError(problems)
    points.sort(key=lambda p: (p.track_id, p.frame_index))
    return points


def format_track_line(point: TrackPoint) -> str:
    left, top, width, height = point.bbox
    base = (
        f"{point.frame_index},{point.track_id},{point.class_label.value},"
        f"{point.confidence:.6g},{left:.6g},{top:.6g},{width:.6g},{height:.6g}"
    )
    if point.contour is not None:
        coords = ";".join(f"{x:.6g}:{y:.6g}" for x, y in point.contour)
        base += f",contour={coords}"
    return base


def dump_tracks(points: list[TrackPoint], fh: TextIO) -> None:
    for p in points:
        fh.write(format_track_line(p) + "\n")


# ---------------------------------------------------------------------------
# Events / alerts / annotations
# ---------------------------------------------------------------------------

def event_to_json(event: EventRecord) -> dict:
    return {
        "type": event.type.value,
        "track_id": event.track_id,
        "t_start_s": round(event.t_s, 6),
        "t_end_s": round(event.t_e, 6),
        "theta_deg": None if event.theta is None else round(event.theta, 6),
        "v_start_mps": None if event.v_start is None else round(event.v_start, 6),
        "v_end_mps": None if event.v_end is None else round(event.v_end, 6),
        "score": round(event.score, 6),
    }


def dump_events(events: list[EventRecord], fh: TextIO) -> None:
    for ev in events:
        fh.write(json.dumps(event_to_json(ev), sort_keys=False) + "\n")


def load_events(stream: Iterable[str] | str | Path) -> list[EventRecord]:
    if isinstance(stream, Path):
        lines = stream.read_text().splitlines()
    elif isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = list(stream)
    events = []
    for line in lines:
        if not line.strip():
            continue
        rec = json.loads(line)
        kind = EventType(rec["type"])
        events.append(
            EventRecord(
                type=kind,
                track_id=int(rec["track_id"]),
                t_s=float(rec["t_start_s"]),
                t_e=float(rec["t_end_s"]),
                theta=rec.get("theta_deg") if kind in TURNING_TYPES else None,
                v_start=rec.get("v_start_mps"),
                v_end=rec.get("v_end_mps"),
                score=float(rec.get("score", 0.0)),
            )
        )
    return events


def dump_alerts(alerts: list[CollisionAlert], fh: TextIO) -> None:
    for al in alerts:
        fh.write(
            json.dumps(
                {
                    "t_s": round(al.t_s, 6),
                    "track_a": al.track_a,
                    "track_b": al.track_b,
                    "horizon_s": round(al.horizon_s, 6),
                    "predicted_overlap": True,
                }
            )
            + "\n"
        )


def dump_annotations(annotations: list[GroundTruthEvent], fh: TextIO) -> None:
    for gt in annotations:
        fh.write(
            json.dumps(
                {
                    "video_id": gt.video_id,
                    "type": gt.type.value,
                    "t_start_s": round(gt.t_s, 6),
                    "t_end_s": round(gt.t_e, 6),
                    "frames": [
                        {
                            "frame": f,
                            "left": round(b[0], 3),
                            "top": round(b[1], 3),
                            "width": round(b[2], 3),
                            "height": round(b[3], 3),
                        }
                        for f, b in sorted(gt.frames.items())
                    ],
                }
            )
            + "\n"
        )


def scenario_from_dict(data: dict) -> SyntheticScenario:
    """Build a synthetic scenario from its JSON form.

    Expected keys: fps, calibration (a calibration dict), vehicles (each with
    track_id, class, dims [l, w, h] and waypoints [[t, x, y], ...]), plus
    optional noise_sigma_px, emit_contours and events (expected ground truth
    with type, track_id, t_start_s, t_end_s).
    """
    camera = load_calibration(data["calibration"])
    vehicles = [
        ScriptedVehicle(
            track_id=int(v["track_id"]),
            waypoints=np.asarray(v["waypoints"], dtype=float),
            dims=tuple(float(x) for x in v.get("dims", (4.0, 1.8, 1.5))),
            class_label=VehicleClass(v.get("class", "car")),
        )
        for v in data["vehicles"]
    ]
    events = [
        EventRecord(
            type=EventType(ev["type"]),
            track_id=int(ev["track_id"]),
            t_s=float(ev["t_start_s"]),
            t_e=float(ev["t_end_s"]),
        )
        for ev in data.get("events", [])
    ]
    return SyntheticScenario(
        camera=camera,
        fps=float(data["fps"]),
        vehicles=vehicles,
        noise_sigma_px=float(data.get("noise_sigma_px", 0.0)),
        emit_contours=bool(data.get("emit_contours", True)),
        expected_events=events,
    )


def load_scenario(path: str | Path) -> SyntheticScenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def load_annotations(stream: Iterable[str] | str | Path) -> list[GroundTruthEvent]:
    if isinstance(stream, Path):
        lines = stream.read_text().splitlines()
    elif isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = list(stream)
    annotations = []
    for line in lines:
        if not line.strip():
            continue
        rec = json.loads(line)
        frames = {
            int(f["frame"]): (
                float(f["left"]), float(f["top"]), float(f["width"]), float(f["height"])
            )
            for f in rec.get("frames", [])
        }
        annotations.append(
            GroundTruthEvent(
                video_id=str(rec["video_id"]),
                type=EventType(rec["type"]),
                t_s=float(rec["t_start_s"]),
                t_e=float(rec["t_end_s"]),
                frames=frames,
            )
        )
    return annotations

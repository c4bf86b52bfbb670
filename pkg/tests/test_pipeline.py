"""Parsing, synthetic generation, and the end-to-end pipeline."""

import io as stdio
import json

import numpy as np
import pytest
from scipy import stats

from groundtrack.errors import TrackParseError
from groundtrack.events import EventType
from groundtrack.evaluation import match_events
from groundtrack.io import dump_events, dump_tracks, parse_tracks
from groundtrack.pipeline import PipelineConfig, run_pipeline, split_segments
from groundtrack.synthetic import (
    PathBuilder,
    ScriptedVehicle,
    SyntheticScenario,
    generate_scenario,
    truth_annotations,
)
from groundtrack.tracks import TrackPoint, VehicleClass

from conftest import CAR_DIMS, overhead_camera, standard_scene

FPS = 10.0


class TestParseTracks:
    def test_one_valid_csv_line(self):
        pts = parse_tracks("3,7,car,0.9,10,10,40,20", fps=FPS)
        assert len(pts) == 1
        p = pts[0]
        assert p.frame_index == 3
        assert p.track_id == 7
        assert p.class_label is VehicleClass.CAR
        assert p.bbox == (10.0, 10.0, 40.0, 20.0)
        assert p.time_s == pytest.approx(0.3)

    def test_empty_input(self):
        assert parse_tracks("", fps=FPS) == []

    def test_duplicate_names_both_lines(self):
        text = "7,3,car,0.9,0,0,10,10\n8,4,car,0.9,0,0,10,10\n7,3,bus,0.5,1,1,9,9"
        with pytest.raises(TrackParseError) as err:
            parse_tracks(text, fps=FPS)
        assert any("line 3" in p and "line 1" in p for p in err.value.problems)

    def test_negative_dimensions_rejected(self):
        with pytest.raises(TrackParseError) as err:
            parse_tracks("0,1,car,0.9,0,0,-5,10", fps=FPS)
        assert "line 1" in err.value.problems[0]

    def test_jsonl_equivalent(self):
        line = json.dumps({
            "frame": 3, "track_id": 7, "class": "car", "confidence": 0.9,
            "left": 10, "top": 10, "width": 40, "height": 20,
        })
        csv_pts = parse_tracks("3,7,car,0.9,10,10,40,20", fps=FPS)
        json_pts = parse_tracks(line, fps=FPS)
        assert json_pts[0].bbox == csv_pts[0].bbox
        assert json_pts[0].track_id == csv_pts[0].track_id

    def test_contour_csv_and_json(self):
        csv_line = "0,1,car,1.0,0,0,10,10,contour=0:0;10:0;10:10;0:10"
        json_line = json.dumps({
            "frame": 0, "track_id": 1, "class": "car", "confidence": 1.0,
            "left": 0, "top": 0, "width": 10, "height": 10,
            "contour": [[0, 0], [10, 0], [10, 10], [0, 10]],
        })
        for text in (csv_line, json_line):
            p = parse_tracks(text, fps=FPS)[0]
            assert p.contour is not None and len(p.contour) == 4

    def test_round_trip_through_writer(self):
        scenario = standard_scene()
        pts = generate_scenario(scenario, seed=1)
        buf = stdio.StringIO()
        dump_tracks(pts, buf)
        again = parse_tracks(buf.getvalue(), fps=FPS)
        assert len(again) == len(pts)
        assert [p.frame_index for p in again] == [p.frame_index for p in pts]

    def test_output_sorted_by_track_then_frame(self):
        text = "5,2,car,1,0,0,5,5\n1,1,car,1,0,0,5,5\n0,2,car,1,0,0,5,5"
        pts = parse_tracks(text, fps=FPS)
        assert [(p.track_id, p.frame_index) for p in pts] == [(1, 1), (2, 0), (2, 5)]


class TestSplitSegments:
    def test_no_gap(self):
        pts = [_point(i, i) for i in range(5)]
        assert [len(s) for s in split_segments(pts, 10)] == [5]

    def test_long_gap_splits(self):
        pts = [_point(i, i) for i in range(3)] + [_point(i, i) for i in range(20, 23)]
        segs = split_segments(pts, 10)
        assert [len(s) for s in segs] == [3, 3]


def _point(frame, x):
    return TrackPoint(
        frame_index=frame, time_s=frame / FPS, track_id=1,
        class_label=VehicleClass.CAR, confidence=1.0,
        bbox=(900.0 + x, 700.0, 60.0, 30.0),
    )


class TestGenerateScenario:
    def test_noise_free_boxes_match_analytic_projection(self, camera):
        from groundtrack.synthetic import _cuboid_corners, _project_corners

        path = PathBuilder(0.0, (0.0, 15.0), 90.0).straight(20.0, 5.0)
        vehicle = ScriptedVehicle(1, path.waypoints(), CAR_DIMS)
        scenario = SyntheticScenario(camera=camera, fps=FPS, vehicles=[vehicle])
        pts = generate_scenario(scenario, seed=0)
        assert pts, "vehicle must be visible"
        for p in pts[::7]:
            t = p.frame_index / FPS
            center = np.array([0.0, 15.0 + 5.0 * t])
            corners = _cuboid_corners(center, np.pi / 2, CAR_DIMS)
            img = _project_corners(camera, corners)
            left, top = img.min(axis=0)
            assert p.bbox[0] == pytest.approx(left, abs=1e-9)
            assert p.bbox[1] == pytest.approx(top, abs=1e-9)

    def test_same_seed_byte_identical(self):
        scenario = standard_scene(noise_sigma_px=2.0)
        a, b = stdio.StringIO(), stdio.StringIO()
        dump_tracks(generate_scenario(scenario, seed=9), a)
        dump_tracks(generate_scenario(scenario, seed=9), b)
        assert a.getvalue() == b.getvalue()

    def test_different_seeds_differ(self):
        scenario = standard_scene(noise_sigma_px=2.0)
        a, b = stdio.StringIO(), stdio.StringIO()
        dump_tracks(generate_scenario(scenario, seed=1), a)
        dump_tracks(generate_scenario(scenario, seed=2), b)
        assert a.getvalue() != b.getvalue()

    def test_noise_is_gaussian_with_requested_sigma(self, camera):
        # Chi-square variance test at the 1% level over >= 10^4 deviations.
        sigma = 2.0
        path = PathBuilder(0.0, (0.0, 12.0), 90.0).straight(25.0, 0.1)
        vehicle = ScriptedVehicle(1, path.waypoints(), CAR_DIMS)
        clean_sc = SyntheticScenario(camera=camera, fps=FPS, vehicles=[vehicle],
                                     emit_contours=False)
        noisy_sc = SyntheticScenario(camera=camera, fps=FPS, vehicles=[vehicle],
                                     noise_sigma_px=sigma, emit_contours=False)
        clean = generate_scenario(clean_sc, seed=0)
        noisy = generate_scenario(noisy_sc, seed=123)
        assert len(clean) == len(noisy) >= 2500
        deviations = []
        for c, n in zip(clean, noisy):
            cl, ct, cw, ch = c.bbox
            nl, nt, nw, nh = n.bbox
            deviations.extend([
                nl - cl, nt - ct,
                (nl + nw) - (cl + cw), (nt + nh) - (ct + ch),
            ])
        deviations = np.asarray(deviations)
        assert len(deviations) >= 10_000
        chi2 = float(((deviations / sigma) ** 2).sum())
        n = len(deviations)
        lo, hi = stats.chi2.ppf([0.005, 0.995], df=n)
        assert lo < chi2 < hi
        # Mean must vanish as well (N(0, s^2), not biased noise).
        assert abs(deviations.mean()) < 4 * sigma / np.sqrt(n)

    def test_out_of_view_frames_omitted(self, camera):
        # Path marches away behind the camera: early frames are omitted.
        path = PathBuilder(0.0, (0.0, -30.0), 90.0).straight(60.0, 10.0)
        vehicle = ScriptedVehicle(1, path.waypoints(), CAR_DIMS)
        scenario = SyntheticScenario(camera=camera, fps=FPS, vehicles=[vehicle])
        pts = generate_scenario(scenario, seed=0)
        assert pts
        assert pts[0].frame_index > 0


class TestRunPipeline:
    def test_empty_tracks(self, camera):
        events, alerts = run_pipeline(PipelineConfig(fps=FPS), camera, [])
        assert events == [] and alerts == []

    def test_stationary_vehicle_no_events(self, camera):
        path = PathBuilder(0.0, (2.0, 18.0), 90.0).hold(8.0)
        vehicle = ScriptedVehicle(1, path.waypoints(), CAR_DIMS)
        scenario = SyntheticScenario(camera=camera, fps=FPS, vehicles=[vehicle])
        pts = generate_scenario(scenario, seed=0)
        events, alerts = run_pipeline(PipelineConfig(fps=FPS), camera, pts)
        assert events == [] and alerts == []

    def test_single_point_track_passes_through(self, camera):
        pts = [_point(0, 0.0)]
        events, alerts = run_pipeline(PipelineConfig(fps=FPS), camera, pts)
        assert events == [] and alerts == []

    def test_scripted_left_turn_detected(self, camera):
        path = (
            PathBuilder(0.0, (8.0, 12.0), 90.0)
            .straight(16.0, 6.0)
            .arc(8.0, 90.0, 6.0)
            .straight(10.0, 6.0)
        )
        vehicle = ScriptedVehicle(1, path.waypoints(), CAR_DIMS)
        scenario = SyntheticScenario(camera=camera, fps=FPS, vehicles=[vehicle])
        pts = generate_scenario(scenario, seed=0)
        events, _ = run_pipeline(PipelineConfig(fps=FPS), camera, pts)
        turns = [e for e in events if e.type is EventType.TURN_LEFT]
        assert len(turns) == 1
        arc_start = 16.0 / 6.0
        arc_end = arc_start + (np.pi / 2) * 8.0 / 6.0
        assert abs(turns[0].t_s - arc_start) <= 0.5
        assert abs(turns[0].t_e - arc_end) <= 0.5
        assert [e for e in events if e.type is not EventType.TURN_LEFT] == []

    def test_deterministic_output(self, camera):
        scenario = standard_scene(noise_sigma_px=2.0)
        pts = generate_scenario(scenario, seed=5)
        config = PipelineConfig(fps=FPS)
        out_a, out_b = stdio.StringIO(), stdio.StringIO()
        dump_events(run_pipeline(config, camera, pts)[0], out_a)
        dump_events(run_pipeline(config, camera, pts)[0], out_b)
        assert out_a.getvalue() == out_b.getvalue()

    def test_workers_do_not_change_output(self, camera):
        scenario = standard_scene(noise_sigma_px=2.0)
        pts = generate_scenario(scenario, seed=5)
        seq = run_pipeline(PipelineConfig(fps=FPS, workers=1), camera, pts)
        par = run_pipeline(PipelineConfig(fps=FPS, workers=4), camera, pts)
        a, b = stdio.StringIO(), stdio.StringIO()
        dump_events(seq[0], a)
        dump_events(par[0], b)
        assert a.getvalue() == b.getvalue()

    def test_concatenation_equals_union(self, camera):
        scenario = standard_scene()
        pts = generate_scenario(scenario, seed=3)
        first = [p for p in pts if p.track_id <= 5]
        second = [p for p in pts if p.track_id > 5]
        config = PipelineConfig(fps=FPS)

        def event_keys(events):
            return [(e.type, e.track_id, round(e.t_s, 9), round(e.t_e, 9)) for e in events]

        joint, _ = run_pipeline(config, camera, first + second)
        only_first, _ = run_pipeline(config, camera, first)
        only_second, _ = run_pipeline(config, camera, second)
        assert sorted(event_keys(joint)) == sorted(
            event_keys(only_first) + event_keys(only_second)
        )

    def test_events_ordered_by_end_time_per_track(self, camera):
        scenario = standard_scene()
        pts = generate_scenario(scenario, seed=0)
        events, _ = run_pipeline(PipelineConfig(fps=FPS), camera, pts)
        per_track: dict[int, list[float]] = {}
        for ev in events:
            per_track.setdefault(ev.track_id, []).append(ev.t_e)
        for ends in per_track.values():
            assert ends == sorted(ends)


class TestEndToEndScene:
    def test_noise_free_scene_all_events_detected(self, camera, scene):
        pts = generate_scenario(scene, seed=0)
        events, _ = run_pipeline(PipelineConfig(fps=FPS), camera, pts)
        gts = truth_annotations(scene)
        res = match_events(events, gts)
        assert res.missed_gts == [], [gts[i].type for i in res.missed_gts]
        assert res.false_alarms == [], [events[i] for i in res.false_alarms]
        # Correct classification and boundary accuracy.
        for det_idx, gt_idx, _ in res.pairs:
            det_ev, gt_ev = events[det_idx], gts[gt_idx]
            assert det_ev.type is gt_ev.type
            assert abs(det_ev.t_s - gt_ev.t_s) <= 0.5, (gt_ev.type, det_ev.t_s, gt_ev.t_s)
            assert abs(det_ev.t_e - gt_ev.t_e) <= 0.5, (gt_ev.type, det_ev.t_e, gt_ev.t_e)

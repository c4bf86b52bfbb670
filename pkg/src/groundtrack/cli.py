"""Command-line front end.

Subcommands:
  run       tracks + calibration + config -> events / collision alerts
  simulate  scenario file -> synthetic tracks (and optional truth annotations)
  score     events + annotations -> metrics report (JSON) and DET samples (CSV)
  plot      metrics report -> DET-curve image and/or CSV
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import io as gio
from .calibration import load_calibration
from .evaluation import DetSample, MetricsReport, score_events
from .pipeline import PipelineConfig, load_config, run_pipeline
from .synthetic import generate_scenario, truth_annotations


def _cmd_run(args) -> int:
    config = load_config(args.config) if args.config else PipelineConfig()
    camera = load_calibration(json.loads(Path(args.calibration).read_text()))
    tracks = gio.parse_tracks(Path(args.tracks), config.fps)
    events, alerts = run_pipeline(config, camera, tracks)
    with open(args.events, "w") as fh:
        gio.dump_events(events, fh)
    if args.collisions:
        with open(args.collisions, "w") as fh:
            gio.dump_alerts(alerts, fh)
    print(f"{len(events)} events, {len(alerts)} collision alerts "
          f"from {len({p.track_id for p in tracks})} tracks")
    return 0


def _cmd_simulate(args) -> int:
    scenario = gio.load_scenario(args.scenario)
    points = generate_scenario(scenario, seed=args.seed)
    with open(args.out, "w") as fh:
        gio.dump_tracks(points, fh)
    if args.truth:
        with open(args.truth, "w") as fh:
            gio.dump_annotations(truth_annotations(scenario), fh)
    print(f"{len(points)} track points for {len(scenario.vehicles)} vehicles (seed {args.seed})")
    return 0


def _report_to_dict(report: MetricsReport) -> dict:
    def sample(s: DetSample) -> dict:
        return {
            "threshold": None if math.isinf(s.threshold) else s.threshold,
            "p_miss": s.p_miss,
            "r_fa": s.r_fa,
            "t_fa": s.t_fa,
        }

    return {
        "per_type": {
            kind.value: {
                "p_miss": m.p_miss,
                "r_fa": m.r_fa,
                "t_fa": m.t_fa,
                "n_true": m.n_true,
                "n_missed": m.n_missed,
                "n_false_alarms": m.n_false_alarms,
                "zero_support": m.zero_support,
                "t_fa_undefined": m.t_fa_undefined,
            }
            for kind, m in report.per_type.items()
        },
        "mean_p_miss": report.mean_p_miss,
        "det": {
            **{
                kind.value: [sample(s) for s in samples]
                for kind, samples in report.det_per_type.items()
            },
            "pooled": [sample(s) for s in report.det_pooled],
        },
    }


def _write_det_csv(report_dict: dict, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "threshold", "p_miss", "r_fa", "t_fa"])
        for group, samples in report_dict["det"].items():
            for s in samples:
                writer.writerow([
                    group,
                    "" if s["threshold"] is None else f"{s['threshold']:.6g}",
                    f"{s['p_miss']:.6g}",
                    f"{s['r_fa']:.6g}",
                    "" if s["t_fa"] is None else f"{s['t_fa']:.6g}",
                ])


def _cmd_score(args) -> int:
    detections = gio.load_events(Path(args.events))
    annotations = gio.load_annotations(Path(args.annotations))
    duration_s = args.duration_s
    if duration_s is None:
        spans = [gt.t_e for gt in annotations] + [d.t_e for d in detections]
        duration_s = max(spans) if spans else 60.0
    n_frames = int(math.ceil(duration_s * args.fps)) + 1
    report = score_events(
        detections,
        annotations,
        video_minutes=duration_s / 60.0,
        n_frames=n_frames,
        fps=args.fps,
        threshold=args.match_threshold,
    )
    report_dict = _report_to_dict(report)
    with open(args.report, "w") as fh:
        json.dump(report_dict, fh, indent=2)
        fh.write("\n")
    if args.det_csv:
        _write_det_csv(report_dict, args.det_csv)
    for kind, m in sorted(report_dict["per_type"].items()):
        t_fa = "n/a" if m["t_fa"] is None else f"{m['t_fa']:.3f}"
        print(f"{kind:12s} p_miss={m['p_miss']:.3f} r_fa={m['r_fa']:.3f}/min t_fa={t_fa}")
    print(f"mean p_miss: {report_dict['mean_p_miss']:.3f}")
    return 0


def _cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    report = json.loads(Path(args.report).read_text())
    det = report["det"]
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5), sharey=True)
    for group, samples in det.items():
        r_fa = [s["r_fa"] for s in samples]
        t_fa = [s["t_fa"] for s in samples]
        p_miss = [s["p_miss"] for s in samples]
        style = {"linewidth": 2.5} if group == "pooled" else {"alpha": 0.8}
        axes[0].plot(r_fa, p_miss, marker="o", label=group, **style)
        if all(v is not None for v in t_fa):
            axes[1].plot(t_fa, p_miss, marker="o", label=group, **style)
    axes[0].set_xlabel("false alarms per minute")
    axes[1].set_xlabel("time-based false alarm")
    axes[0].set_ylabel("probability of missed detection")
    axes[0].set_ylim(-0.02, 1.02)
    axes[0].legend(fontsize=8)
    for ax in axes:
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    if args.csv:
        _write_det_csv(report, args.csv)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groundtrack",
        description="Ground-plane kinematics and traffic event detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="detect events and collisions on a track file")
    p.add_argument("--tracks", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--config", default=None, help="JSON config; defaults otherwise")
    p.add_argument("--events", required=True, help="output events JSONL")
    p.add_argument("--collisions", default=None, help="output collision alerts JSONL")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("simulate", help="render a scripted scenario into tracks")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output tracks file")
    p.add_argument("--truth", default=None, help="output truth annotations JSONL")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("score", help="score detected events against annotations")
    p.add_argument("--events", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--fps", type=float, required=True)
    p.add_argument("--duration-s", type=float, default=None,
                   help="video duration; defaults to the latest event end")
    p.add_argument("--match-threshold", type=float, default=0.2)
    p.add_argument("--report", required=True, help="output report JSON")
    p.add_argument("--det-csv", default=None, help="output DET samples CSV")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("plot", help="plot DET curves from a metrics report")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True, help="output image (png/pdf)")
    p.add_argument("--csv", default=None, help="also write DET samples CSV")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

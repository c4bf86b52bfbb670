"""Detection scoring: event matching, miss/false-alarm metrics, DET curves.

Detections and ground-truth annotations are matched 1-to-1 within each
(event type, video) group by maximizing total overlap with the assignment
algorithm; pairs below the overlap threshold stay unmatched.  From the
matching follow P_miss (missed fraction), R_fa (false alarms per minute) and
T_fa (excess detected presence on event-free frames), plus DET curves from a
descending sweep over detection scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .events import EventRecord, EventType

DEFAULT_MATCH_THRESHOLD = 0.2


@dataclass(eq=False)
class GroundTruthEvent:
    """One annotated event; ``frames`` maps frame index -> (l, t, w, h) px."""

    video_id: str
    type: EventType
    t_s: float
    t_e: float
    frames: dict[int, tuple[float, float, float, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.t_e <= self.t_s:
            raise ValueError("annotation must end after it starts")


@dataclass(eq=False)
class MatchResult:
    pairs: list[tuple[int, int, float]]  # (detection idx, gt idx, overlap)
    missed_gts: list[int]
    false_alarms: list[int]


@dataclass(eq=False)
class GroupMetrics:
    """Metrics of one matched group (typically one event type)."""

    p_miss: float
    r_fa: float
    t_fa: float | None
    n_true: int
    n_missed: int
    n_false_alarms: int
    zero_support: bool = False     # no ground truth; p_miss defined as 0
    t_fa_undefined: bool = False   # no event-free frames


@dataclass(eq=False)
class DetSample:
    threshold: float
    p_miss: float
    r_fa: float
    t_fa: float | None


@dataclass(eq=False)
class MetricsReport:
    per_type: dict[EventType, GroupMetrics]
    mean_p_miss: float
    det_per_type: dict[EventType, list[DetSample]]
    det_pooled: list[DetSample]


# ---------------------------------------------------------------------------
# Overlap measures
# ---------------------------------------------------------------------------

def object_iou(b1, b2) -> float:
    """Intersection over union of two (left, top, width, height) boxes."""
    l1, t1, w1, h1 = b1
    l2, t2, w2, h2 = b2
    if w1 <= 0 or h1 <= 0 or w2 <= 0 or h2 <= 0:
        raise ValueError("boxes must have positive dimensions")
    ix = max(0.0, min(l1 + w1, l2 + w2) - max(l1, l2))
    iy = max(0.0, min(t1 + h1, t2 + h2) - max(t1, t2))
    inter = ix * iy
    union = w1 * h1 + w2 * h2 - inter
    return inter / union


def event_iou(track_frames: dict[int, tuple], gt: GroundTruthEvent) -> float:
    """Mean per-frame box IoU over the annotated frames of one event.

    Frames where the track has no box contribute 0, so lost detections
    degrade the score rather than being skipped.
    """
    if not gt.frames:
        raise ValueError("annotation carries no per-frame boxes")
    total = 0.0
    for frame, gt_box in gt.frames.items():
        box = track_frames.get(frame)
        if box is not None:
            total += object_iou(box, gt_box)
    return total / len(gt.frames)


def temporal_iou(detection: EventRecord, gt: GroundTruthEvent) -> float:
    """Intersection over union of the two time spans."""
    inter = min(detection.t_e, gt.t_e) - max(detection.t_s, gt.t_s)
    if inter <= 0:
        return 0.0
    union = max(detection.t_e, gt.t_e) - min(detection.t_s, gt.t_s)
    return inter / union


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------

def match_events(
    detections: list[EventRecord],
    gts: list[GroundTruthEvent],
    overlap_fn=temporal_iou,
    threshold: float = DEFAULT_MATCH_THRESHOLD,
    detection_videos: list[str] | None = None,
) -> MatchResult:
    """1-to-1 match detections to ground truth within (type, video) groups.

    The assignment maximizes total overlap; pairs whose overlap falls below
    ``threshold`` are unmatched.  Unmatched ground truths are misses,
    unmatched detections false alarms.  ``detection_videos`` supplies the
    video id of each detection; by default all detections share the single
    video id present in the ground truth (or "default" when there is none).
    """
    if detection_videos is None:
        vids = {gt.video_id for gt in gts}
        default_vid = vids.pop() if len(vids) == 1 else "default"
        detection_videos = [default_vid] * len(detections)

    groups: dict[tuple, tuple[list[int], list[int]]] = {}
    for i, det in enumerate(detections):
        groups.setdefault((det.type, detection_videos[i]), ([], []))[0].append(i)
    for j, gt in enumerate(gts):
        groups.setdefault((gt.type, gt.video_id), ([], []))[1].append(j)

    pairs: list[tuple[int, int, float]] = []
    matched_dets: set[int] = set()
    matched_gts: set[int] = set()
    for det_idx, gt_idx in groups.values():
        if not det_idx or not gt_idx:
            continue
        overlap = np.zeros((len(det_idx), len(gt_idx)))
        for a, i in enumerate(det_idx):
            for b, j in enumerate(gt_idx):
                overlap[a, b] = overlap_fn(detections[i], gts[j])
        rows, cols = linear_sum_assignment(overlap, maximize=True)
        for a, b in zip(rows, cols):
            if overlap[a, b] >= threshold:
                i, j = det_idx[a], gt_idx[b]
                pairs.append((i, j, float(overlap[a, b])))
                matched_dets.add(i)
                matched_gts.add(j)

    missed = [j for j in range(len(gts)) if j not in matched_gts]
    false_alarms = [i for i in range(len(detections)) if i not in matched_dets]
    return MatchResult(pairs=pairs, missed_gts=missed, false_alarms=false_alarms)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def _active_counts(spans: list[tuple[float, float]], n_frames: int, fps: float) -> np.ndarray:
    counts = np.zeros(n_frames, dtype=int)
    for t_s, t_e in spans:
        lo = max(0, int(math.ceil(t_s * fps - 1e-9)))
        hi = min(n_frames - 1, int(math.floor(t_e * fps + 1e-9)))
        if hi >= lo:
            counts[lo: hi + 1] += 1
    return counts


def compute_metrics(
    match: MatchResult,
    detections: list[EventRecord],
    gts: list[GroundTruthEvent],
    video_minutes: float,
    n_frames: int,
    fps: float,
) -> GroupMetrics:
    """Miss/false-alarm metrics of one matched group.

    T_fa sums, over frames with no active ground truth anywhere, the excess
    count of active detections over active ground truths, normalized by the
    number of ground-truth-free frames (NR).  With no ground truth at all the
    miss probability is reported as 0 with ``zero_support`` set; with no
    event-free frames T_fa is None with ``t_fa_undefined`` set.
    """
    if video_minutes <= 0:
        raise ValueError("video duration must be positive")
    n_true = len(gts)
    n_missed = len(match.missed_gts)
    n_fa = len(match.false_alarms)
    zero_support = n_true == 0
    p_miss = 0.0 if zero_support else n_missed / n_true
    r_fa = n_fa / video_minutes

    det_counts = _active_counts([(d.t_s, d.t_e) for d in detections], n_frames, fps)
    gt_counts = _active_counts([(g.t_s, g.t_e) for g in gts], n_frames, fps)
    event_free = gt_counts == 0
    nr = int(event_free.sum())
    if nr == 0:
        t_fa, undefined = None, True
    else:
        excess = np.maximum(0, det_counts - gt_counts)
        t_fa, undefined = float(excess[event_free].sum() / nr), False

    return GroupMetrics(
        p_miss=p_miss,
        r_fa=r_fa,
        t_fa=t_fa,
        n_true=n_true,
        n_missed=n_missed,
        n_false_alarms=n_fa,
        zero_support=zero_support,
        t_fa_undefined=undefined,
    )


def det_curve(
    detections: list[EventRecord],
    gts: list[GroundTruthEvent],
    video_minutes: float,
    n_frames: int,
    fps: float,
    overlap_fn=temporal_iou,
    threshold: float = DEFAULT_MATCH_THRESHOLD,
) -> list[DetSample]:
    """P_miss/R_fa/T_fa swept over detection-score thresholds, descending.

    The first sample (threshold +inf) corresponds to the empty detection
    set; each following sample keeps detections scoring at least the
    threshold and recomputes matching and metrics from scratch.
    """
    thresholds = [math.inf] + sorted({d.score for d in detections}, reverse=True)
    samples = []
    for thr in thresholds:
        kept = [d for d in detections if d.score >= thr]
        match = match_events(kept, gts, overlap_fn, threshold)
        metrics = compute_metrics(match, kept, gts, video_minutes, n_frames, fps)
        samples.append(
            DetSample(threshold=thr, p_miss=metrics.p_miss, r_fa=metrics.r_fa, t_fa=metrics.t_fa)
        )
    return samples


def score_events(
    detections: list[EventRecord],
    gts: list[GroundTruthEvent],
    video_minutes: float,
    n_frames: int,
    fps: float,
    overlap_fn=temporal_iou,
    threshold: float = DEFAULT_MATCH_THRESHOLD,
) -> MetricsReport:
    """Full report: per-type metrics, mean P_miss, and DET curves."""
    per_type: dict[EventType, GroupMetrics] = {}
    det_per_type: dict[EventType, list[DetSample]] = {}
    types = sorted(
        {d.type for d in detections} | {g.type for g in gts}, key=lambda t: t.value
    )
    for kind in types:
        dets_t = [d for d in detections if d.type is kind]
        gts_t = [g for g in gts if g.type is kind]
        match = match_events(dets_t, gts_t, overlap_fn, threshold)
        per_type[kind] = compute_metrics(match, dets_t, gts_t, video_minutes, n_frames, fps)
        det_per_type[kind] = det_curve(
            dets_t, gts_t, video_minutes, n_frames, fps, overlap_fn, threshold
        )
    supported = [m.p_miss for m in per_type.values() if not m.zero_support]
    mean_p_miss = float(np.mean(supported)) if supported else 0.0
    pooled = det_curve(detections, gts, video_minutes, n_frames, fps, overlap_fn, threshold)
    return MetricsReport(
        per_type=per_type,
        mean_p_miss=mean_p_miss,
        det_per_type=det_per_type,
        det_pooled=pooled,
    )


def recall_table(
    tracks: dict[int, dict[int, tuple]],
    gts: list[GroundTruthEvent],
    iou_thresholds: list[float],
) -> dict[EventType, dict[float, float]]:
    """Fraction of annotations whose matched track reaches each event IoU.

    Tracks are matched to annotations per type by maximizing total event IoU
    (no minimum), mirroring how an upstream tracker's ceiling on recall is
    measured; an annotation left unmatched counts as a failure at every
    threshold.
    """
    table: dict[EventType, dict[float, float]] = {}
    track_ids = sorted(tracks)
    by_type: dict[EventType, list[int]] = {}
    for j, gt in enumerate(gts):
        by_type.setdefault(gt.type, []).append(j)
    for kind, gt_idx in sorted(by_type.items(), key=lambda kv: kv[0].value):
        matched_iou: dict[int, float] = {}
        if track_ids:
            overlap = np.zeros((len(track_ids), len(gt_idx)))
            for a, tid in enumerate(track_ids):
                for b, j in enumerate(gt_idx):
                    overlap[a, b] = event_iou(tracks[tid], gts[j])
            rows, cols = linear_sum_assignment(overlap, maximize=True)
            matched_iou = {int(b): float(overlap[a, b]) for a, b in zip(rows, cols)}
        table[kind] = {
            float(thr): sum(
                1 for b in range(len(gt_idx)) if b in matched_iou and matched_iou[b] >= thr
            ) / len(gt_idx)
            for thr in iou_thresholds
        }
    return table

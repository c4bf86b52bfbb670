"""groundtrack: monocular ground-plane kinematics and traffic event detection.

Converts pre-associated 2D vehicle tracks from one calibrated surveillance
camera into metric ground-plane states, detects turning/start/stop events and
imminent collisions from kinematic patterns alone (no training), and scores
detections against annotations.
"""

from .calibration import (
    CameraModel,
    camera_from_krt,
    camera_from_projection,
    camera_from_vanishing_points,
    estimate_vanishing_point,
    load_calibration,
    project_world_to_image,
    reproject_image_to_ground,
    vanishing_point_of_ground_direction,
)
from .collision import (
    CollisionAlert,
    CollisionMonitor,
    detect_collisions,
    point_edge_distance,
    predict_center,
    predict_quadrangle,
    quadrangle_distance,
    quadrangles_overlap,
)
from .errors import (
    BehindCameraError,
    CalibrationError,
    DegenerateGeometryError,
    GroundTrackError,
    HorizonError,
    TrackParseError,
)
from .evaluation import (
    GroundTruthEvent,
    MetricsReport,
    compute_metrics,
    det_curve,
    event_iou,
    match_events,
    object_iou,
    recall_table,
    score_events,
)
from .events import (
    DetectorParams,
    EventRecord,
    EventType,
    detect_events,
    detect_linear,
    detect_turning,
    run_trigger_machine,
    score_event,
)
from .geometry import (
    Box3D,
    GroundObservation,
    Quadrangle,
    build_3d_bbox,
    ground_velocity,
    make_observation,
)
from .io import dump_events, load_annotations, load_events, load_scenario, parse_tracks
from .kinematics import (
    GroundState,
    KinematicsParams,
    to_polar,
    unwrap_angles,
    window_slope,
)
from .pipeline import PipelineConfig, load_config, process_track, run_pipeline
from .smoothing import NoiseScales, SmoothedTrackPoint, smooth_track
from .synthetic import (
    PathBuilder,
    ScriptedVehicle,
    SyntheticScenario,
    generate_scenario,
    truth_annotations,
)
from .tracks import TrackPoint, VehicleClass

__version__ = "0.1.0"

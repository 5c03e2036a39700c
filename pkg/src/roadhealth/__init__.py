"""Road surface health backend.

Turns per-frame dashcam pothole detections, OCR'd on-screen timestamps, and
GPS logs into a deduplicated geotagged pothole registry, keeps road segments
annotated with warranty-aware health states, escalates deterioration to the
responsible parties, verifies repairs on later passes, and serves the whole
thing as GeoJSON over HTTP.
"""

from .config import Config
from .dedupe import Pothole, PotholeStatus, cluster, merge_into_registry
from .detection import (
    BoundingBox,
    DetectionRecord,
    Observation,
    SeverityGrade,
    geotag_batch,
    grade_severity,
    parse_detections_jsonl,
)
from .geo import haversine_m, point_to_polyline_m, polyline_length_m
from .governance import (
    AlertEvent,
    DeliveryStatus,
    HealthState,
    Traversal,
    dispatch_alert,
    evaluate_health,
    on_state_change,
    run_deadline_tick,
    verify_repairs,
)
from .gpslog import GpsFix, GpsTrack, locate, parse_gps_log, to_utc
from .pipeline import IngestResult, flush_outbox, notify_segment, run_ingest
from .segments import (
    ContractMetadata,
    RoadSegment,
    attribute_pothole,
    create_segment,
    delete_segment,
    edit_segment,
    fetch_route,
)
from .service import create_app
from .store import Store
from .timestamps import FrameTimestamp, parse_timestamp, repair_ocr_text

__version__ = "0.1.0"

__all__ = [
    "AlertEvent",
    "BoundingBox",
    "Config",
    "ContractMetadata",
    "DeliveryStatus",
    "DetectionRecord",
    "FrameTimestamp",
    "GpsFix",
    "GpsTrack",
    "HealthState",
    "IngestResult",
    "Observation",
    "Pothole",
    "PotholeStatus",
    "RoadSegment",
    "SeverityGrade",
    "Store",
    "Traversal",
    "attribute_pothole",
    "cluster",
    "create_app",
    "create_segment",
    "delete_segment",
    "dispatch_alert",
    "edit_segment",
    "evaluate_health",
    "fetch_route",
    "flush_outbox",
    "geotag_batch",
    "grade_severity",
    "haversine_m",
    "locate",
    "merge_into_registry",
    "notify_segment",
    "on_state_change",
    "parse_detections_jsonl",
    "parse_gps_log",
    "parse_timestamp",
    "point_to_polyline_m",
    "polyline_length_m",
    "repair_ocr_text",
    "run_deadline_tick",
    "run_ingest",
    "to_utc",
    "verify_repairs",
]

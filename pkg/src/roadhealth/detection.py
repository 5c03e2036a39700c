"""Detector-output ingest: severity grading and geotagging.

One JSONL line per analyzed frame carries the raw overlay text, frame size,
and detector boxes. Each box becomes one geolocated Observation; frames that
fail timestamp repair or fall off the GPS track are counted per failure class
so nothing disappears silently.
"""

from __future__ import annotations

import base64
import binascii
import enum
import json
from dataclasses import dataclass, field
from datetime import datetime

from . import gpslog, timestamps
from .errors import (
    DegenerateBox,
    GapTooLarge,
    InvalidDate,
    MalformedDetectionLine,
    MalformedTimestamp,
    OutsideTrackSpan,
)


class SeverityGrade(enum.IntEnum):
    """Ordered severity; comparisons follow Minor < Moderate < Severe."""

    MINOR = 1
    MODERATE = 2
    SEVERE = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "SeverityGrade":
        return cls[label.upper()]


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float
    confidence: float


@dataclass(frozen=True)
class DetectionRecord:
    frame_id: int
    raw_timestamp_text: str
    frame_w: int
    frame_h: int
    boxes: tuple[BoundingBox, ...]
    thumbnail: str | None = None


@dataclass(frozen=True)
class Observation:
    lat: float
    lon: float
    observed_at: datetime
    severity: SeverityGrade
    confidence: float
    source_frame: int
    thumbnail: str | None = None


@dataclass
class IngestStats:
    """Per-batch accounting; frames and boxes are tracked separately so the
    box-level conservation law stays checkable."""

    frames: int = 0
    boxes: int = 0
    observations: int = 0
    skipped: dict[str, int] = field(default_factory=dict)
    skipped_boxes: dict[str, int] = field(default_factory=dict)

    def skip_frame(self, reason: str, box_count: int) -> None:
        self.skipped[reason] = self.skipped.get(reason, 0) + 1
        if box_count:
            self.skipped_boxes[reason] = self.skipped_boxes.get(reason, 0) + box_count

    def skip_box(self, reason: str) -> None:
        self.skipped_boxes[reason] = self.skipped_boxes.get(reason, 0) + 1

    def as_dict(self) -> dict:
        return {
            "frames": self.frames,
            "boxes": self.boxes,
            "observations": self.observations,
            "skipped": dict(sorted(self.skipped.items())),
            "skipped_boxes": dict(sorted(self.skipped_boxes.items())),
        }


def parse_detections_jsonl(
    data: bytes | str,
    thumbnail_max_b64: int = 64 * 1024,
) -> tuple[list[DetectionRecord], dict[str, int]]:
    """Parse the detections interchange file (one frame per line).

    Malformed lines are skipped and counted; duplicate frame_ids within the
    batch are rejected. Oversized thumbnails are dropped (the detection is
    kept) to bound store growth.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    records: list[DetectionRecord] = []
    seen_frames: set[int] = set()
    diagnostics = {"malformed_line": 0, "duplicate_frame": 0, "oversized_thumbnail": 0}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(_parse_record(line, line_no, seen_frames, thumbnail_max_b64, diagnostics))
        except MalformedDetectionLine:
            diagnostics["malformed_line"] += 1
    return records, {k: v for k, v in diagnostics.items() if v}


def _parse_record(line, line_no, seen_frames, thumbnail_max_b64, diagnostics) -> DetectionRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedDetectionLine(f"bad JSON: {exc}", line=line_no) from exc
    if not isinstance(obj, dict):
        raise MalformedDetectionLine("line is not an object", line=line_no)
    try:
        frame_id = int(obj["frame_id"])
        raw_text = str(obj.get("raw_timestamp_text", ""))
        frame_w = int(obj["frame_w"])
        frame_h = int(obj["frame_h"])
        raw_boxes = obj.get("boxes", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDetectionLine(f"missing/invalid field: {exc}", line=line_no) from exc
    if frame_w <= 0 or frame_h <= 0:
        raise MalformedDetectionLine("frame dimensions must be positive", line=line_no)
    if frame_id in seen_frames:
        diagnostics["duplicate_frame"] += 1
        raise MalformedDetectionLine(f"duplicate frame_id {frame_id}", line=line_no)

    boxes = []
    for raw in raw_boxes:
        try:
            box = BoundingBox(
                x=float(raw["x"]),
                y=float(raw["y"]),
                w=float(raw["w"]),
                h=float(raw["h"]),
                confidence=float(raw["confidence"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedDetectionLine(f"bad box: {exc}", line=line_no) from exc
        if box.w <= 0 or box.h <= 0 or box.x < 0 or box.y < 0:
            raise MalformedDetectionLine("box extents must be positive and offsets >= 0", line=line_no)
        if box.x + box.w > frame_w or box.y + box.h > frame_h:
            raise MalformedDetectionLine("box exceeds frame bounds", line=line_no)
        if not (0.0 <= box.confidence <= 1.0):
            raise MalformedDetectionLine("confidence outside [0, 1]", line=line_no)
        boxes.append(box)

    thumbnail = obj.get("thumbnail")
    if thumbnail is not None:
        if not isinstance(thumbnail, str) or not _is_base64(thumbnail):
            raise MalformedDetectionLine("thumbnail is not valid Base64", line=line_no)
        if len(thumbnail) > thumbnail_max_b64:
            diagnostics["oversized_thumbnail"] += 1
            thumbnail = None

    seen_frames.add(frame_id)
    return DetectionRecord(
        frame_id=frame_id,
        raw_timestamp_text=raw_text,
        frame_w=frame_w,
        frame_h=frame_h,
        boxes=tuple(boxes),
        thumbnail=thumbnail,
    )


def _is_base64(text: str) -> bool:
    try:
        base64.b64decode(text, validate=True)
        return True
    except (binascii.Error, ValueError):
        return False


def grade_severity(
    box: BoundingBox,
    frame_w: int,
    frame_h: int,
    moderate_ratio: float = 0.005,
    severe_ratio: float = 0.02,
) -> SeverityGrade:
    """Grade a detection by its area relative to the frame.

    Band edges are inclusive on the upper band: a ratio exactly at a
    threshold takes the more severe grade.
    """
    area = box.w * box.h
    if area <= 0:
        raise DegenerateBox(f"{box.w}x{box.h} box has no area")
    ratio = area / (frame_w * frame_h)
    if ratio >= severe_ratio:
        return SeverityGrade.SEVERE
    if ratio >= moderate_ratio:
        return SeverityGrade.MODERATE
    return SeverityGrade.MINOR


def geotag_batch(
    records: list[DetectionRecord],
    track: gpslog.GpsTrack,
    offset_s: int,
    confidence_floor: float = 0.25,
    max_gap_s: float = 5.0,
    edge_tolerance_s: float = 1.0,
    moderate_ratio: float = 0.005,
    severe_ratio: float = 0.02,
) -> tuple[list[Observation], IngestStats]:
    """Join detections with the GPS track into geolocated observations.

    Output is sorted by (observed_at, frame_id) so downstream clustering is
    deterministic regardless of input order.
    """
    stats = IngestStats(frames=len(records), boxes=sum(len(r.boxes) for r in records))
    observations: list[Observation] = []

    for record in records:
        if not record.raw_timestamp_text.strip():
            stats.skip_frame("empty_text", len(record.boxes))
            continue
        repaired = timestamps.repair_ocr_text(record.raw_timestamp_text)
        try:
            frame_ts = timestamps.parse_timestamp(repaired)
        except (MalformedTimestamp, InvalidDate):
            stats.skip_frame("invalid_timestamp", len(record.boxes))
            continue
        instant = gpslog.to_utc(frame_ts, offset_s)
        try:
            lat, lon = gpslog.locate(
                track, instant, max_gap_s=max_gap_s, edge_tolerance_s=edge_tolerance_s
            )
        except OutsideTrackSpan:
            stats.skip_frame("outside_track_span", len(record.boxes))
            continue
        except GapTooLarge:
            stats.skip_frame("gap_too_large", len(record.boxes))
            continue

        for box in record.boxes:
            if box.confidence < confidence_floor:
                stats.skip_box("low_confidence")
                continue
            observations.append(
                Observation(
                    lat=lat,
                    lon=lon,
                    observed_at=instant,
                    severity=grade_severity(box, record.frame_w, record.frame_h,
                                            moderate_ratio, severe_ratio),
                    confidence=box.confidence,
                    source_frame=record.frame_id,
                    thumbnail=record.thumbnail,
                )
            )

    observations.sort(key=lambda o: (o.observed_at, o.source_frame))
    stats.observations = len(observations)
    return observations, stats

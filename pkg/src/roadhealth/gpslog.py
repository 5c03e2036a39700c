"""GPS log parsing, clock-offset conversion, and position interpolation.

The logger records UTC fixes; the dashcam overlay runs on the local wall
clock, so a measured per-deployment offset converts frame timestamps to UTC
before looking a position up on the track. Positions between fixes come from
linear interpolation; frames that fall outside the track (beyond a small edge
tolerance) or inside an oversized fix gap are dropped by the caller rather
than extrapolated.
"""

from __future__ import annotations

import csv
import io
from bisect import bisect_left
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from .errors import (
    EmptyTrack,
    GapTooLarge,
    MalformedRow,
    NonMonotonicTime,
    OutOfRangeCoordinate,
    OutsideTrackSpan,
)
from .geo import round_coord
from .timestamps import FrameTimestamp

EXPECTED_COLUMNS = ("utc_iso", "lat", "lon")
OPTIONAL_COLUMNS = ("heading", "speed")


@dataclass(frozen=True)
class GpsFix:
    utc: datetime
    lat: float
    lon: float
    heading: float | None = None  # carried for future use, not read anywhere yet
    speed: float | None = None


@dataclass(frozen=True)
class GpsTrack:
    fixes: tuple[GpsFix, ...]

    @property
    def start(self) -> datetime:
        return self.fixes[0].utc

    @property
    def end(self) -> datetime:
        return self.fixes[-1].utc


def _parse_utc(text: str) -> datetime:
    # Logger emits ISO-8601 with a Z suffix; fromisoformat on 3.10 wants an
    # explicit numeric offset.
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def parse_gps_log(data: bytes | str) -> GpsTrack:
    """Parse the logger CSV (``utc_iso,lat,lon[,heading,speed]``) into a track.

    The file must already be in time order with strictly increasing
    timestamps; violations raise NonMonotonicTime with the offending line.
    """
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyTrack("GPS log has no header")
    header = [h.strip().lower() for h in header]
    if tuple(header[:3]) != EXPECTED_COLUMNS:
        raise MalformedRow(f"header must start with {','.join(EXPECTED_COLUMNS)}", line=1)
    for extra in header[3:]:
        if extra not in OPTIONAL_COLUMNS:
            raise MalformedRow(f"unknown column {extra!r}", line=1)

    fixes: list[GpsFix] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) < 3 or len(row) > len(header):
            raise MalformedRow(f"expected {len(header)} fields, got {len(row)}", line=line_no)
        values = dict(zip(header, (cell.strip() for cell in row)))
        try:
            utc = _parse_utc(values["utc_iso"])
            lat = float(values["lat"])
            lon = float(values["lon"])
        except (ValueError, KeyError) as exc:
            raise MalformedRow(str(exc), line=line_no) from exc
        if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
            raise OutOfRangeCoordinate(f"lat={lat}, lon={lon}", line=line_no)
        heading = _optional_float(values, "heading", line_no)
        speed = _optional_float(values, "speed", line_no)
        if heading is not None and not (0.0 <= heading < 360.0):
            raise MalformedRow(f"heading {heading} outside [0, 360)", line=line_no)
        if speed is not None and speed < 0.0:
            raise MalformedRow(f"negative speed {speed}", line=line_no)
        if fixes and utc <= fixes[-1].utc:
            raise NonMonotonicTime(
                f"{utc.isoformat()} does not advance past {fixes[-1].utc.isoformat()}",
                line=line_no,
            )
        # Interpolation does not wrap at the antimeridian; a track crossing it
        # is rejected here rather than silently producing positions near 0.
        if fixes and abs(lon - fixes[-1].lon) > 180.0:
            raise MalformedRow("track crosses the antimeridian", line=line_no)
        fixes.append(GpsFix(utc=utc, lat=lat, lon=lon, heading=heading, speed=speed))

    if not fixes:
        raise EmptyTrack("GPS log has no data rows")
    return GpsTrack(fixes=tuple(fixes))


def _optional_float(values: dict, key: str, line_no: int) -> float | None:
    raw = values.get(key, "")
    if raw in ("", None):
        return None
    try:
        return float(raw)
    except ValueError as exc:
        raise MalformedRow(f"bad {key} value {raw!r}", line=line_no) from exc


def to_utc(frame: FrameTimestamp, offset_s: int) -> datetime:
    """Convert a local frame timestamp to UTC: utc = local - offset.

    Exact integer-second arithmetic; the calendar rollover is handled by the
    datetime library.
    """
    local = datetime(
        frame.year, frame.month, frame.day, frame.hour, frame.minute, frame.second
    )
    return (local - timedelta(seconds=offset_s)).replace(tzinfo=timezone.utc)


def locate(
    track: GpsTrack,
    at: datetime,
    max_gap_s: float = 5.0,
    edge_tolerance_s: float = 1.0,
) -> tuple[float, float]:
    """Interpolate the vehicle position at a UTC instant.

    Returns (lat, lon) rounded to the persisted 5-decimal precision so that
    every downstream distance operates on exactly the coordinates the store
    would hold. Instants outside the track span by more than the edge
    tolerance raise OutsideTrackSpan; a bracketing fix gap over ``max_gap_s``
    raises GapTooLarge. Within the tolerance the boundary fix is returned
    unchanged: positions are never extrapolated.
    """
    times = [f.utc for f in track.fixes]
    tol = timedelta(seconds=edge_tolerance_s)
    if at < times[0] - tol or at > times[-1] + tol:
        raise OutsideTrackSpan(
            f"{at.isoformat()} outside [{times[0].isoformat()}, {times[-1].isoformat()}]"
        )
    if at <= times[0]:
        fix = track.fixes[0]
        return round_coord(fix.lat), round_coord(fix.lon)
    if at >= times[-1]:
        fix = track.fixes[-1]
        return round_coord(fix.lat), round_coord(fix.lon)

    idx = bisect_left(times, at)
    if times[idx] == at:
        fix = track.fixes[idx]
        return round_coord(fix.lat), round_coord(fix.lon)

    before, after = track.fixes[idx - 1], track.fixes[idx]
    gap = (after.utc - before.utc).total_seconds()
    if gap > max_gap_s:
        raise GapTooLarge(gap)
    frac = (at - before.utc).total_seconds() / gap
    lat = before.lat + frac * (after.lat - before.lat)
    lon = before.lon + frac * (after.lon - before.lon)
    return round_coord(lat), round_coord(lon)

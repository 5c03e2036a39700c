"""Warranty-aware health evaluation, alerting, and repair verification.

Each road segment carries a four-state health flag driven by the density of
active potholes per kilometer and the warranty calendar:

    green   below the warning density
    yellow  warning density reached, warranty still running
    orange  warning density reached, warranty expired
    red     severe density, or an unrepaired yellow that outlived its warranty

State transitions fan out alert events to the responsible contractor and the
road authority; transitions into red additionally notify the escalation list.
Events are persisted first and delivered to a webhook sink afterwards, so a
dead sink can never lose or duplicate an alert.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum, IntEnum
from typing import TYPE_CHECKING, Iterable

import requests

from .dedupe import Pothole, PotholeStatus
from .errors import ZeroLengthSegment
from .geo import haversine_m
from .gpslog import GpsTrack, locate

if TYPE_CHECKING:
    from .config import Config
    from .detection import Observation
    from .segments import RoadSegment
    from .store import Store


class HealthState(IntEnum):
    """Ordered so that deterioration is a strictly increasing comparison."""

    GREEN = 1
    YELLOW = 2
    ORANGE = 3
    RED = 4

    @property
    def value_name(self) -> str:
        return self.name.lower()

    @classmethod
    def from_name(cls, name: str) -> "HealthState":
        return cls[name.upper()]


class DeliveryStatus(Enum):
    PENDING = "pending"
    SENT = "sent"
    FAILED = "failed"


@dataclass
class AlertEvent:
    """One persisted notification, self-contained enough to dispatch later."""

    id: int | None
    segment_id: int
    transition: str
    recipients: list[str]
    message: str
    health: str
    contractor: str
    created_at: datetime
    delivery_status: DeliveryStatus = DeliveryStatus.PENDING
    idempotency_key: str = ""
    attempts: int = 0


@dataclass
class Traversal:
    """A vehicle pass over the network: its track and the time window covered."""

    track: GpsTrack
    window_start: datetime
    window_end: datetime


def evaluate_health(
    segment: "RoadSegment",
    active_count: int,
    now: datetime,
    warn_per_km: float = 5.0,
    severe_per_km: float = 20.0,
) -> HealthState:
    """Decide a segment's health from density, warranty, and prior state.

    Density is active potholes per kilometer of segment length. A yellow
    segment whose warranty lapses while potholes remain active jumps straight
    to red regardless of density: the contractor ran out the clock.
    """
    if segment.length_m <= 0:
        raise ZeroLengthSegment(f"segment {segment.id} has length {segment.length_m}")
    density = active_count / (segment.length_m / 1000.0)
    past_warranty = now.date() > segment.contract.warranty_end
    if density >= severe_per_km:
        state = HealthState.RED
    elif density >= warn_per_km:
        state = HealthState.ORANGE if past_warranty else HealthState.YELLOW
    else:
        state = HealthState.GREEN
    # Breach rule, latched: once red with an expired warranty and potholes
    # still open, a segment stays red until fully cleared. Without the latch
    # a replayed evaluation would decay red to orange and emit a phantom
    # improvement alert.
    if (
        past_warranty
        and active_count > 0
        and segment.health in (HealthState.YELLOW, HealthState.RED)
    ):
        state = HealthState.RED
    return state


def is_deadline_breach(segment: "RoadSegment", active_count: int, now: datetime) -> bool:
    return (
        segment.health is HealthState.YELLOW
        and now.date() > segment.contract.warranty_end
        and active_count > 0
    )


def idempotency_key(segment_id: int, transition: str, at: datetime) -> str:
    day_bucket = at.astimezone(timezone.utc).date().isoformat()
    raw = f"{segment_id}|{transition}|{day_bucket}"
    return hashlib.sha256(raw.encode()).hexdigest()


def build_alert(
    segment: "RoadSegment",
    old: HealthState,
    new: HealthState,
    now: datetime,
    authority_contacts: list[str],
    escalation_contacts: list[str],
    breach: bool = False,
) -> AlertEvent:
    transition = "deadline_breach" if breach else f"{old.value_name}->{new.value_name}"
    if new > old:
        recipients = [segment.contract.contractor_contact] + list(authority_contacts)
        if new is HealthState.RED:
            recipients += list(escalation_contacts)
        verb = "breached its warranty deadline" if breach else "deteriorated"
        message = (
            f"Segment {segment.id} ({segment.contract.contractor_name}) {verb}: "
            f"{old.value_name} -> {new.value_name}"
        )
    else:
        recipients = list(authority_contacts)
        message = (
            f"Segment {segment.id} ({segment.contract.contractor_name}) improved: "
            f"{old.value_name} -> {new.value_name}"
        )
    # de-duplicate while preserving order; a contact may sit on several lists
    seen: set[str] = set()
    recipients = [r for r in recipients if r and not (r in seen or seen.add(r))]
    return AlertEvent(
        id=None,
        segment_id=segment.id,
        transition=transition,
        recipients=recipients,
        message=message,
        health=new.value_name,
        contractor=segment.contract.contractor_name,
        created_at=now,
        delivery_status=DeliveryStatus.PENDING,
        idempotency_key=idempotency_key(segment.id, transition, now),
    )


def on_state_change(
    segment: "RoadSegment",
    old: HealthState,
    new: HealthState,
    now: datetime,
    authority_contacts: list[str],
    escalation_contacts: list[str],
    existing_keys: set[str],
    breach: bool = False,
) -> list[AlertEvent]:
    """Alert events owed for one observed transition.

    At most one event per (segment, transition, day): a key already pending
    or sent suppresses the duplicate. No transition, no event.
    """
    if new is old:
        return []
    event = build_alert(
        segment, old, new, now, authority_contacts, escalation_contacts, breach=breach
    )
    if event.idempotency_key in existing_keys:
        return []
    return [event]


def dispatch_alert(
    event: AlertEvent,
    sink_url: str,
    sink_token: str = "",
    retries: int = 3,
    backoff_s: float = 1.0,
    timeout_s: float = 10.0,
    sleep=time.sleep,
) -> AlertEvent:
    """Deliver one pending event to the webhook sink.

    Tries up to `retries` times with exponential backoff, then marks the
    event failed; a later flush may retry it. 2xx marks it sent. The event's
    attempt counter records the real number of POSTs made.
    """
    if event.delivery_status is not DeliveryStatus.PENDING:
        return event
    payload = {
        "event_id": event.id,
        "segment_id": event.segment_id,
        "transition": event.transition,
        "health": event.health,
        "contractor": event.contractor,
        "message": event.message,
        "created_at": event.created_at.astimezone(timezone.utc)
        .isoformat()
        .replace("+00:00", "Z"),
    }
    headers = {"Content-Type": "application/json"}
    if sink_token:
        headers["Authorization"] = f"Bearer {sink_token}"
    for attempt in range(retries):
        event.attempts += 1
        try:
            resp = requests.post(
                sink_url, data=json.dumps(payload), headers=headers, timeout=timeout_s
            )
            if 200 <= resp.status_code < 300:
                event.delivery_status = DeliveryStatus.SENT
                return event
        except requests.RequestException:
            pass
        if attempt < retries - 1:
            sleep(backoff_s * (2**attempt))
    event.delivery_status = DeliveryStatus.FAILED
    return event


def verify_repairs(
    traversal: Traversal,
    batch_observations: Iterable["Observation"],
    registry: Iterable[Pothole],
    coverage_radius_m: float = 10.0,
    cluster_threshold_m: float = 2.5,
    exclude_ids: set[int] | None = None,
) -> list[int]:
    """Active potholes the camera passed but did not see again.

    The traversal is resampled at one-second intervals; a pothole within
    `coverage_radius_m` of any sample counts as covered. Covered actives with
    no observation of this batch within the cluster threshold are presumed
    repaired. Potholes outside coverage are left untouched: absence of
    evidence only counts where the camera actually looked.
    """
    exclude = exclude_ids or set()
    samples = sample_track(traversal)
    if not samples:
        return []
    observations = list(batch_observations)
    resolved: list[int] = []
    for pothole in registry:
        if pothole.status is not PotholeStatus.ACTIVE or pothole.id in exclude:
            continue
        position = (pothole.lat, pothole.lon)
        covered = any(haversine_m(position, s) <= coverage_radius_m for s in samples)
        if not covered:
            continue
        seen = any(
            haversine_m(position, (obs.lat, obs.lon)) <= cluster_threshold_m
            for obs in observations
        )
        if not seen:
            resolved.append(pothole.id)
    return sorted(resolved)


def sample_track(traversal: Traversal) -> list[tuple[float, float]]:
    """Positions along the traversal at 1 Hz, endpoints included."""
    samples: list[tuple[float, float]] = []
    t = traversal.window_start
    step = timedelta(seconds=1)
    end = traversal.window_end
    while t <= end:
        try:
            samples.append(locate(traversal.track, t))
        except Exception:
            pass  # gaps in the track simply contribute no coverage
        t += step
    if samples and t - step < end:
        try:
            samples.append(locate(traversal.track, end))
        except Exception:
            pass
    return samples


def run_deadline_tick(store: "Store", config: "Config") -> dict:
    """Re-evaluate every segment against the clock; emit alerts for changes.

    This is the scheduled pass that catches warranty expiries between
    ingests: nothing about the potholes changed, only the calendar.
    """
    from .pipeline import persist_transition_alerts

    now = config.now()
    transitions = 0
    events_created = 0
    with store.transaction():
        segments = store.list_segments()
        for segment in segments:
            active = store.count_active_potholes(segment.id)
            breach = is_deadline_breach(segment, active, now)
            new = evaluate_health(
                segment, active, now,
                warn_per_km=config.density_warn_per_km,
                severe_per_km=config.density_severe_per_km,
            )
            if new is segment.health:
                continue
            old = segment.health
            segment.health = new
            store.update_segment(
                segment, actor="scheduler", action="segment.health",
                detail={"from": old.value_name, "to": new.value_name},
            )
            transitions += 1
            events_created += persist_transition_alerts(
                store, config, segment, old, new, now, breach=breach, actor="scheduler"
            )
    return {
        "segments_evaluated": len(segments),
        "transitions": transitions,
        "events_created": events_created,
    }

"""End-to-end ingest: one uploaded batch in, one committed state change out.

The whole pipeline runs inside a single store transaction so a crash midway
leaves nothing half-applied:

    parse detections -> parse GPS -> geotag -> cluster -> merge into registry
    -> attribute new potholes -> verify repairs -> re-evaluate segment health
    -> persist alert events

Alert delivery happens after commit (transactional outbox): events are
already durable, so a dead webhook sink delays them but cannot lose them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from datetime import datetime

from .config import Config
from .dedupe import PotholeStatus, cluster, merge_into_registry
from .detection import geotag_batch, parse_detections_jsonl
from .governance import (
    AlertEvent,
    DeliveryStatus,
    HealthState,
    Traversal,
    dispatch_alert,
    evaluate_health,
    idempotency_key,
    is_deadline_breach,
    on_state_change,
    verify_repairs,
)
from .gpslog import parse_gps_log
from .segments import attribute_pothole
from .store import Store


@dataclass
class IngestResult:
    batch_id: int
    statistics: dict


def run_ingest(
    store: Store,
    config: Config,
    detections_data: bytes | str,
    gps_data: bytes | str,
    actor: str = "system",
) -> IngestResult:
    """Process one (detections.jsonl, gps.csv) upload atomically.

    Raises the underlying parse error when either file is unusable; nothing
    is persisted in that case. Statistics account for every input frame and
    box: parsed ones become observations or land in a skip bucket.
    """
    records, parse_diagnostics = parse_detections_jsonl(
        detections_data, thumbnail_max_b64=config.thumbnail_max_b64
    )
    track = parse_gps_log(gps_data)
    observations, stats = geotag_batch(
        records,
        track,
        offset_s=config.clock_offset_s,
        confidence_floor=config.confidence_floor,
        max_gap_s=config.max_gap_s,
        edge_tolerance_s=config.edge_tolerance_s,
        moderate_ratio=config.severity_moderate_ratio,
        severe_ratio=config.severity_severe_ratio,
    )
    now = config.now()

    with store.transaction():
        batch_id = store.insert_batch(
            uploaded_at=now,
            detections_digest=_digest(detections_data),
            gps_digest=_digest(gps_data),
            statistics={},
            created_by=actor,
        )

        mutations = merge_into_registry(
            cluster(observations, threshold_m=config.cluster_threshold_m),
            store.list_potholes(),
            threshold_m=config.cluster_threshold_m,
        )
        segments = store.list_segments()
        counted = {"created": 0, "updated": 0, "reopened": 0, "repaired": 0}
        touched_ids: set[int] = set()
        affected_segments: set[int] = set()
        for m in mutations:
            if m.kind == "create":
                m.pothole.segment_id = attribute_pothole(
                    m.pothole, segments, max_dist_m=config.attribution_radius_m
                )
                store.insert_pothole(m.pothole, actor=actor)
                counted["created"] += 1
            elif m.kind == "reopen":
                store.update_pothole(m.pothole, actor=actor, action="pothole.reopen")
                counted["reopened"] += 1
            else:
                store.update_pothole(m.pothole, actor=actor, action="pothole.update")
                counted["updated"] += 1
            touched_ids.add(m.pothole.id)
            if m.pothole.segment_id is not None:
                affected_segments.add(m.pothole.segment_id)

        # Repair verification runs after the merge so a fresh re-detection is
        # never immediately judged repaired by its own batch.
        resolved = verify_repairs(
            Traversal(track, track.start, track.end),
            observations,
            store.list_potholes(status=PotholeStatus.ACTIVE),
            coverage_radius_m=config.coverage_radius_m,
            cluster_threshold_m=config.cluster_threshold_m,
            exclude_ids=touched_ids,
        )
        for pothole_id in resolved:
            p = store.get_pothole(pothole_id)
            p.status = PotholeStatus.REPAIRED
            store.update_pothole(p, actor=actor, action="pothole.repair")
            counted["repaired"] += 1
            if p.segment_id is not None:
                affected_segments.add(p.segment_id)

        alerts_created = 0
        for segment_id in sorted(affected_segments):
            alerts_created += _reevaluate_segment(store, config, segment_id, now, actor)

        statistics = stats.as_dict()
        statistics["batch_id"] = batch_id
        for kind, n in counted.items():
            statistics[f"potholes_{kind}"] = n
        statistics["alerts_created"] = alerts_created
        if parse_diagnostics:
            statistics["parse"] = parse_diagnostics
        store.finalize_batch(batch_id, statistics)

    flush_outbox(store, config)
    return IngestResult(batch_id=batch_id, statistics=statistics)


def _reevaluate_segment(
    store: Store, config: Config, segment_id: int, now: datetime, actor: str
) -> int:
    segment = store.get_segment(segment_id)
    active = store.count_active_potholes(segment_id)
    breach = is_deadline_breach(segment, active, now)
    new = evaluate_health(
        segment, active, now,
        warn_per_km=config.density_warn_per_km,
        severe_per_km=config.density_severe_per_km,
    )
    if new is segment.health:
        return 0
    old = segment.health
    segment.health = new
    store.update_segment(
        segment, actor=actor, action="segment.health",
        detail={"from": old.value_name, "to": new.value_name},
    )
    return persist_transition_alerts(
        store, config, segment, old, new, now, breach=breach, actor=actor
    )


def persist_transition_alerts(
    store: Store,
    config: Config,
    segment,
    old: HealthState,
    new: HealthState,
    now: datetime,
    breach: bool,
    actor: str,
) -> int:
    events = on_state_change(
        segment, old, new, now,
        authority_contacts=config.authority_contacts,
        escalation_contacts=config.escalation_contacts,
        existing_keys=store.active_alert_keys(),
        breach=breach,
    )
    for event in events:
        store.insert_alert(event, actor=actor)
    return len(events)


def notify_segment(store: Store, config: Config, segment_id: int, actor: str) -> AlertEvent | None:
    """Operator-triggered reminder to the contractor and the authority.

    Idempotent per day: a second manual notification for the same segment on
    the same day is suppressed and returns None.
    """
    now = config.now()
    with store.transaction():
        segment = store.get_segment(segment_id)
        key = idempotency_key(segment.id, "manual", now)
        if key in store.active_alert_keys():
            return None
        seen: set[str] = set()
        recipients = [
            r
            for r in [segment.contract.contractor_contact, *config.authority_contacts]
            if r and not (r in seen or seen.add(r))
        ]
        event = AlertEvent(
            id=None,
            segment_id=segment.id,
            transition="manual",
            recipients=recipients,
            message=(
                f"Manual notification for segment {segment.id}"
                f" ({segment.contract.contractor_name}): health {segment.health.value_name}"
            ),
            health=segment.health.value_name,
            contractor=segment.contract.contractor_name,
            created_at=now,
            idempotency_key=key,
        )
        store.insert_alert(event, actor=actor)
    flush_outbox(store, config)
    return event


def segment_report(store: Store, config: Config, segment_id: int) -> dict:
    """Accountability report for one segment: health, density, warranty
    countdown, pothole counts, and alert history.

    This is the public view: contractor contact addresses stay out of it.
    """
    segment = store.get_segment(segment_id)
    counts = {"active": 0, "repaired": 0}
    by_severity = {"minor": 0, "moderate": 0, "severe": 0}
    for p in store.list_potholes():
        if p.segment_id != segment_id:
            continue
        counts[p.status.value] += 1
        if p.status is PotholeStatus.ACTIVE:
            by_severity[p.severity.label] += 1
    from .store import format_utc

    alerts = [
        {
            "id": e.id,
            "transition": e.transition,
            "health": e.health,
            "message": e.message,
            "delivery_status": e.delivery_status.value,
            "created_at": format_utc(e.created_at),
            "attempts": e.attempts,
        }
        for e in store.list_alerts(segment_id=segment_id)
    ]
    today = config.now().date()
    days_to_deadline = (segment.contract.warranty_end - today).days
    return {
        "segment": {
            "id": segment.id,
            "geometry": [[lat, lon] for lat, lon in segment.geometry],
            "health": segment.health.value_name,
            "length_m": segment.length_m,
            "contract": {
                "contractor_name": segment.contract.contractor_name,
                "construction_date": segment.contract.construction_date.isoformat(),
                "budget": segment.contract.budget,
                "warranty_end": segment.contract.warranty_end.isoformat(),
                "category": segment.contract.category,
            },
        },
        "health": segment.health.value_name,
        "density_per_km": counts["active"] / (segment.length_m / 1000.0),
        "warranty": {
            "status": "active" if today <= segment.contract.warranty_end else "expired",
            "days_to_deadline": days_to_deadline,
        },
        "potholes": {**counts, "active_by_severity": by_severity},
        "alerts": alerts,
    }


def network_summary(store: Store) -> dict:
    """Whole-network rollup used by the CLI report without a segment id."""
    potholes = store.list_potholes()
    segments = store.list_segments()
    return {
        "potholes": {
            "total": len(potholes),
            "active": sum(1 for p in potholes if p.status is PotholeStatus.ACTIVE),
            "repaired": sum(1 for p in potholes if p.status is PotholeStatus.REPAIRED),
        },
        "segments": [
            {
                "id": s.id,
                "health": s.health.value_name,
                "contractor_name": s.contract.contractor_name,
                "length_m": s.length_m,
                "active_potholes": store.count_active_potholes(s.id),
            }
            for s in segments
        ],
    }


def flush_outbox(store: Store, config: Config) -> dict:
    """Dispatch pending alert events to the webhook sink, if one is set."""
    summary = {"dispatched": 0, "sent": 0, "failed": 0}
    if not config.webhook_url:
        return summary
    for event in store.list_alerts(delivery_status=DeliveryStatus.PENDING):
        dispatch_alert(
            event,
            config.webhook_url,
            sink_token=config.webhook_token,
            retries=config.dispatch_retries,
            backoff_s=config.dispatch_backoff_s,
            timeout_s=config.http_timeout_s,
        )
        store.update_alert_delivery(event)
        summary["dispatched"] += 1
        if event.delivery_status is DeliveryStatus.SENT:
            summary["sent"] += 1
        else:
            summary["failed"] += 1
    return summary


def _digest(data: bytes | str) -> str:
    raw = data.encode("utf-8") if isinstance(data, str) else data
    return hashlib.sha256(raw).hexdigest()

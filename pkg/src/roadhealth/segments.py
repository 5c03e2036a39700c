"""Contract-annotated road segments: routing, geometry, and attribution.

A segment is the polyline between two operator-chosen endpoints, fetched from
an OSRM-compatible router (or a straight line as fallback), annotated with
the contract metadata that makes accountability possible: contractor, build
date, budget, warranty end. Potholes are attributed to the nearest segment
within a fixed radius.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import TYPE_CHECKING

import requests

from .errors import InvalidContract, NoRoute, NotFound, ProviderUnreachable
from .geo import point_to_polyline_m, polyline_length_m

if TYPE_CHECKING:
    from .config import Config
    from .dedupe import Pothole
    from .store import Store

LatLon = tuple[float, float]


def validate_polyline(vertices: list[LatLon]) -> list[LatLon]:
    if len(vertices) < 2:
        raise ValueError("polyline needs at least 2 vertices")
    cleaned: list[LatLon] = []
    for lat, lon in vertices:
        if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
            raise ValueError(f"coordinate out of range: ({lat}, {lon})")
        if cleaned and cleaned[-1] == (lat, lon):
            continue  # consecutive duplicates collapse
        cleaned.append((lat, lon))
    if len(cleaned) < 2:
        raise ValueError("polyline degenerates to a single point")
    return cleaned


@dataclass(frozen=True)
class ContractMetadata:
    contractor_name: str
    contractor_contact: str
    construction_date: date
    budget: float
    warranty_end: date
    category: str | None = None

    def validate(self) -> None:
        if not self.contractor_name.strip():
            raise InvalidContract("contractor_name is required")
        if self.budget < 0:
            raise InvalidContract("budget must be >= 0")
        if self.warranty_end < self.construction_date:
            raise InvalidContract("warranty_end precedes construction_date")


@dataclass
class RoadSegment:
    id: int | None
    geometry: list[LatLon]
    contract: ContractMetadata
    health: "object"  # governance.HealthState; typed loosely to avoid an import cycle
    length_m: float
    created_by: str | None = None
    version: int = 1


def fetch_route(start: LatLon, end: LatLon, base_url: str, timeout_s: float = 10.0) -> list[LatLon]:
    """Ask the routing provider for the road path between two points.

    The provider speaks the OSRM route API; note its wire order is lon,lat.
    Raises ProviderUnreachable on transport failure and NoRoute when the
    provider answers with any code other than "Ok".
    """
    url = (
        f"{base_url.rstrip('/')}/route/v1/driving/"
        f"{start[1]},{start[0]};{end[1]},{end[0]}"
        "?overview=full&geometries=geojson"
    )
    try:
        resp = requests.get(url, timeout=timeout_s)
        payload = resp.json()
    except (requests.RequestException, ValueError) as exc:
        raise ProviderUnreachable(f"routing provider at {base_url}: {exc}") from exc
    if payload.get("code") != "Ok":
        raise NoRoute(f"provider returned code {payload.get('code')!r}")
    try:
        coords = payload["routes"][0]["geometry"]["coordinates"]
        vertices = [(float(lat), float(lon)) for lon, lat in coords]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise NoRoute(f"provider geometry unusable: {exc}") from exc
    try:
        return validate_polyline(vertices)
    except ValueError as exc:
        raise NoRoute(str(exc)) from exc


def resolve_geometry(
    start: LatLon,
    end: LatLon,
    mode: str,
    base_url: str,
    fallback_straight: bool = False,
    timeout_s: float = 10.0,
) -> list[LatLon]:
    if start == end:
        raise ValueError("start and end must differ")
    if mode == "straight":
        return validate_polyline([start, end])
    if mode != "routed":
        raise ValueError(f"unknown mode {mode!r}")
    try:
        return fetch_route(start, end, base_url, timeout_s=timeout_s)
    except NoRoute:
        if fallback_straight:
            return validate_polyline([start, end])
        raise


def attribute_pothole(
    p: "Pothole",
    segments: list[RoadSegment],
    max_dist_m: float = 15.0,
) -> int | None:
    """Nearest segment within the attribution radius, smallest id on ties."""
    best_id = None
    best_key = None
    for seg in segments:
        dist = point_to_polyline_m((p.lat, p.lon), seg.geometry)
        if dist > max_dist_m:
            continue
        key = (dist, seg.id)
        if best_key is None or key < best_key:
            best_key, best_id = key, seg.id
    return best_id


# --- registry operations (store-backed) ---


def create_segment(
    store: "Store",
    config: "Config",
    start: LatLon,
    end: LatLon,
    contract: ContractMetadata,
    mode: str = "routed",
    created_by: str = "system",
    fallback_straight: bool = False,
) -> RoadSegment:
    from .governance import HealthState

    contract.validate()
    geometry = resolve_geometry(
        start, end, mode, config.routing_base_url,
        fallback_straight=fallback_straight, timeout_s=config.http_timeout_s,
    )
    segment = RoadSegment(
        id=None,
        geometry=geometry,
        contract=contract,
        health=HealthState.GREEN,
        length_m=polyline_length_m(geometry),
        created_by=created_by,
    )
    with store.transaction():
        store.insert_segment(segment, actor=created_by)
        touched = _reattribute_all(store, config, actor=created_by)
        _refresh_health(store, config, touched | {segment.id}, actor=created_by)
        segment = store.get_segment(segment.id)
    return segment


def edit_segment(
    store: "Store",
    config: "Config",
    segment_id: int,
    new_start: LatLon | None = None,
    new_end: LatLon | None = None,
    new_contract: ContractMetadata | None = None,
    mode: str = "routed",
    actor: str = "system",
    fallback_straight: bool = False,
) -> RoadSegment:
    with store.transaction():
        segment = store.get_segment(segment_id)
        if new_start is not None or new_end is not None:
            start = new_start if new_start is not None else segment.geometry[0]
            end = new_end if new_end is not None else segment.geometry[-1]
            segment.geometry = resolve_geometry(
                start, end, mode, config.routing_base_url,
                fallback_straight=fallback_straight, timeout_s=config.http_timeout_s,
            )
            segment.length_m = polyline_length_m(segment.geometry)
        if new_contract is not None:
            new_contract.validate()
            segment.contract = new_contract
        store.update_segment(segment, actor=actor, action="segment.edit")
        touched = _reattribute_all(store, config, actor=actor)
        _refresh_health(store, config, touched | {segment.id}, actor=actor)
        segment = store.get_segment(segment.id)
    return segment


def delete_segment(store: "Store", config: "Config", segment_id: int, actor: str = "system") -> None:
    with store.transaction():
        store.delete_segment(segment_id, actor=actor)
        touched = _reattribute_all(store, config, actor=actor)
        _refresh_health(store, config, touched, actor=actor)


def _reattribute_all(store: "Store", config: "Config", actor: str) -> set[int]:
    """Recompute pothole attribution against the current segment set.

    Geometry edits can steal potholes from neighboring segments, so the whole
    registry is re-run. Returns the ids of segments that gained or lost a
    pothole so callers can refresh their health.
    """
    segments = store.list_segments()
    touched: set[int] = set()
    for pothole in store.list_potholes():
        attributed = attribute_pothole(pothole, segments, config.attribution_radius_m)
        if attributed != pothole.segment_id:
            if pothole.segment_id is not None:
                touched.add(pothole.segment_id)
            if attributed is not None:
                touched.add(attributed)
            pothole.segment_id = attributed
            store.update_pothole(pothole, actor=actor, action="pothole.attribute")
    return touched


def _refresh_health(store: "Store", config: "Config", segment_ids: set[int], actor: str) -> None:
    from .governance import evaluate_health

    for segment_id in sorted(segment_ids):
        try:
            segment = store.get_segment(segment_id)
        except NotFound:
            continue
        active = store.count_active_potholes(segment_id)
        new_health = evaluate_health(
            segment, active, config.now(),
            warn_per_km=config.density_warn_per_km,
            severe_per_km=config.density_severe_per_km,
        )
        if new_health is not segment.health:
            old = segment.health
            segment.health = new_health
            store.update_segment(
                segment, actor=actor, action="segment.health",
                detail={"from": old.value_name, "to": new_health.value_name},
            )

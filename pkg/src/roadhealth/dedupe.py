"""Collapse repeated per-frame observations into persistent pothole entities.

A dashcam at 30 FPS sees the same hole many times, so observations are
greedily clustered: each one joins the first cluster whose running centroid
lies within the threshold (2.5 m by default), and clusters are then merged
into the registry against existing potholes using the same radius. The
canonical (observed_at, source_frame) sort order upstream makes the greedy
pass deterministic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from datetime import datetime

from .detection import Observation, SeverityGrade
from .geo import haversine_m, round_coord


class PotholeStatus(enum.Enum):
    ACTIVE = "active"
    REPAIRED = "repaired"


@dataclass
class Pothole:
    """A deduplicated defect with lifecycle state. ``id`` is store-assigned."""

    id: int | None
    lat: float
    lon: float
    severity: SeverityGrade
    status: PotholeStatus
    first_seen: datetime
    last_seen: datetime
    detection_count: int
    thumbnail: str | None = None
    segment_id: int | None = None
    version: int = 1


@dataclass
class Cluster:
    members: list[Observation] = field(default_factory=list)
    _lat_sum: float = 0.0
    _lon_sum: float = 0.0

    @property
    def centroid(self) -> tuple[float, float]:
        n = len(self.members)
        return self._lat_sum / n, self._lon_sum / n

    @property
    def persisted_centroid(self) -> tuple[float, float]:
        lat, lon = self.centroid
        return round_coord(lat), round_coord(lon)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def first_seen(self) -> datetime:
        return min(m.observed_at for m in self.members)

    @property
    def last_seen(self) -> datetime:
        return max(m.observed_at for m in self.members)

    @property
    def severity(self) -> SeverityGrade:
        return max(m.severity for m in self.members)

    @property
    def thumbnail(self) -> str | None:
        for m in self.members:
            if m.thumbnail is not None:
                return m.thumbnail
        return None

    def add(self, obs: Observation) -> None:
        self.members.append(obs)
        self._lat_sum += obs.lat
        self._lon_sum += obs.lon


def cluster(observations: list[Observation], threshold_m: float = 2.5) -> list[Cluster]:
    """Greedy incremental clustering over canonically ordered observations.

    Guarantee: every member was within ``threshold_m`` of its cluster's
    running centroid at the moment it joined (the centroid may drift later).
    """
    clusters: list[Cluster] = []
    for obs in observations:
        for c in clusters:
            if haversine_m((obs.lat, obs.lon), c.centroid) <= threshold_m:
                c.add(obs)
                break
        else:
            fresh = Cluster()
            fresh.add(obs)
            clusters.append(fresh)
    return clusters


@dataclass(frozen=True)
class RegistryMutation:
    kind: str  # "create" | "update" | "reopen"
    pothole: Pothole
    cluster: Cluster


def merge_into_registry(
    clusters: list[Cluster],
    existing: list[Pothole],
    threshold_m: float = 2.5,
) -> list[RegistryMutation]:
    """Match batch clusters against the persisted registry.

    Active potholes take precedence over repaired ones; a repaired pothole
    within the radius is reopened (re-detection). Distances are computed on
    persisted-precision centroids so replaying a batch from the store makes
    the same decisions. Ties go to the smallest existing id.
    """
    mutations: list[RegistryMutation] = []
    # Registry state evolves within the batch so two clusters cannot both
    # create a pothole at the same spot.
    pool = [replace(p) for p in existing]

    for c in clusters:
        centroid = c.persisted_centroid
        match = _nearest(pool, centroid, threshold_m, PotholeStatus.ACTIVE)
        if match is not None:
            _absorb(match, c)
            mutations.append(RegistryMutation("update", match, c))
            continue
        match = _nearest(pool, centroid, threshold_m, PotholeStatus.REPAIRED)
        if match is not None:
            match.status = PotholeStatus.ACTIVE
            _absorb(match, c)
            mutations.append(RegistryMutation("reopen", match, c))
            continue
        created = Pothole(
            id=None,
            lat=centroid[0],
            lon=centroid[1],
            severity=c.severity,
            status=PotholeStatus.ACTIVE,
            first_seen=c.first_seen,
            last_seen=c.last_seen,
            detection_count=c.size,
            thumbnail=c.thumbnail,
        )
        pool.append(created)
        mutations.append(RegistryMutation("create", created, c))
    return mutations


def _nearest(
    pool: list[Pothole],
    centroid: tuple[float, float],
    threshold_m: float,
    status: PotholeStatus,
) -> Pothole | None:
    best: Pothole | None = None
    best_key: tuple[float, float] | None = None
    for p in pool:
        if p.status is not status:
            continue
        dist = haversine_m(centroid, (p.lat, p.lon))
        if dist > threshold_m:
            continue
        key = (dist, p.id if p.id is not None else float("inf"))
        if best_key is None or key < best_key:
            best, best_key = p, key
    return best


def _absorb(pothole: Pothole, c: Cluster) -> None:
    pothole.detection_count += c.size
    pothole.first_seen = min(pothole.first_seen, c.first_seen)
    pothole.last_seen = max(pothole.last_seen, c.last_seen)
    pothole.severity = max(pothole.severity, c.severity)
    if pothole.thumbnail is None:
        pothole.thumbnail = c.thumbnail

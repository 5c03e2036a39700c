"""Greedy observation clustering and registry merge semantics."""

import random
from datetime import timedelta

import pytest

from roadhealth.dedupe import (
    Pothole,
    PotholeStatus,
    cluster,
    merge_into_registry,
)
from roadhealth.detection import Observation, SeverityGrade

from .conftest import utc
from .oracles import great_circle_atan2_m, reference_greedy_cluster

T0 = utc(2025, 8, 13, 6, 30, 0)


def obs(lat, lon, seconds=0, severity=SeverityGrade.MODERATE, frame=None, thumbnail=None):
    return Observation(
        lat=lat,
        lon=lon,
        observed_at=T0 + timedelta(seconds=seconds),
        severity=severity,
        confidence=0.9,
        source_frame=frame if frame is not None else seconds,
        thumbnail=thumbnail,
    )


def pothole(pid, lat, lon, status=PotholeStatus.ACTIVE, severity=SeverityGrade.MODERATE,
            detection_count=3, thumbnail=None):
    return Pothole(
        id=pid,
        lat=lat,
        lon=lon,
        severity=severity,
        status=status,
        first_seen=T0 - timedelta(days=1),
        last_seen=T0 - timedelta(hours=1),
        detection_count=detection_count,
        thumbnail=thumbnail,
    )


class TestCluster:
    def test_singleton(self):
        clusters = cluster([obs(20.0, 85.0)])
        assert len(clusters) == 1
        assert clusters[0].size == 1
        assert clusters[0].centroid == (20.0, 85.0)

    def test_three_near_points_merge_fourth_splits(self):
        """Meridian points at 0/1e-5/2e-5 deg join one cluster; 6e-5 opens another."""
        points = [
            obs(20.0, 85.0, seconds=0),
            obs(20.00001, 85.0, seconds=1),
            obs(20.00002, 85.0, seconds=2),
            obs(20.00006, 85.0, seconds=3),
        ]
        # Independent oracle: replay the greedy joins and check each distance
        # decision against an atan2-form great-circle implementation.
        centroid_after_two = (20.000005, 85.0)
        assert great_circle_atan2_m((20.00001, 85.0), (20.0, 85.0)) < 2.5
        assert great_circle_atan2_m((20.00002, 85.0), centroid_after_two) < 2.5
        centroid_after_three = (20.00001, 85.0)
        assert great_circle_atan2_m((20.00006, 85.0), centroid_after_three) > 2.5

        clusters = cluster(points)
        assert len(clusters) == 2
        assert clusters[0].size == 3
        assert clusters[1].size == 1
        lat, lon = clusters[0].centroid
        assert lat == pytest.approx(20.00001, abs=1e-12)
        assert lon == 85.0

    def test_member_within_threshold_of_running_centroid_at_join(self):
        rng = random.Random(42)
        points = [
            obs(20.0 + rng.uniform(-1e-4, 1e-4), 85.0 + rng.uniform(-1e-4, 1e-4), seconds=i)
            for i in range(80)
        ]
        clusters = cluster(points)
        # Replay each cluster's growth; the guaranteed invariant is join-time
        # proximity, not final pairwise separation.
        for c in clusters:
            lat_sum = lon_sum = 0.0
            for i, member in enumerate(c.members):
                if i > 0:
                    centroid = (lat_sum / i, lon_sum / i)
                    assert great_circle_atan2_m((member.lat, member.lon), centroid) <= 2.5
                lat_sum += member.lat
                lon_sum += member.lon

    def test_matches_reference_implementation(self):
        rng = random.Random(7)
        for _ in range(100):
            n = rng.randrange(1, 13)
            points = [
                obs(
                    12.9 + rng.uniform(0, 2e-4),
                    77.6 + rng.uniform(0, 2e-4),
                    seconds=i,
                )
                for i in range(n)
            ]
            expected = reference_greedy_cluster([(p.lat, p.lon) for p in points], 2.5)
            clusters = cluster(points)
            got = {}
            for ci, c in enumerate(clusters):
                for member in c.members:
                    got[member.source_frame] = ci
            assert [got[i] for i in range(n)] == expected

    def test_deterministic_after_canonical_resort(self):
        rng = random.Random(99)
        points = [
            obs(20.0 + rng.uniform(0, 3e-4), 85.0 + rng.uniform(0, 3e-4), seconds=i)
            for i in range(40)
        ]
        baseline = [c.persisted_centroid for c in cluster(points)]
        for _ in range(25):
            shuffled = points[:]
            rng.shuffle(shuffled)
            shuffled.sort(key=lambda o: (o.observed_at, o.source_frame))
            assert [c.persisted_centroid for c in cluster(shuffled)] == baseline

    def test_cluster_summary_fields(self):
        c = cluster(
            [
                obs(20.0, 85.0, seconds=5, severity=SeverityGrade.MINOR),
                obs(20.00001, 85.0, seconds=2, severity=SeverityGrade.SEVERE, thumbnail="QUJD"),
                obs(20.00002, 85.0, seconds=9, severity=SeverityGrade.MODERATE, thumbnail="WFla"),
            ]
        )[0]
        assert c.first_seen == T0 + timedelta(seconds=2)
        assert c.last_seen == T0 + timedelta(seconds=9)
        assert c.severity is SeverityGrade.SEVERE
        # First non-null thumbnail in member order, not severity order.
        assert c.thumbnail == "QUJD"
        assert c.persisted_centroid == (20.00001, 85.0)

    def test_centroid_rounding_only_at_persistence(self):
        c = cluster([obs(20.000004, 85.0), obs(20.000005, 85.0)])[0]
        assert c.centroid == pytest.approx((20.0000045, 85.0), abs=1e-12)
        assert c.persisted_centroid == (20.0, 85.0)


class TestMerge:
    def test_update_nearby_active(self):
        # ~1.0 m north of the existing pothole.
        existing = [pothole(1, 20.0, 85.0)]
        clusters = cluster([obs(20.000009, 85.0, seconds=0), obs(20.000009, 85.0, seconds=1, frame=1)])
        mutations = merge_into_registry(clusters, existing)
        assert len(mutations) == 1
        m = mutations[0]
        assert m.kind == "update"
        assert m.pothole.id == 1
        assert m.pothole.detection_count == 5
        assert m.pothole.last_seen == T0 + timedelta(seconds=1)
        assert m.pothole.status is PotholeStatus.ACTIVE

    def test_reopen_nearby_repaired(self):
        existing = [pothole(1, 20.0, 85.0, status=PotholeStatus.REPAIRED)]
        mutations = merge_into_registry(cluster([obs(20.000009, 85.0)]), existing)
        assert [m.kind for m in mutations] == ["reopen"]
        assert mutations[0].pothole.status is PotholeStatus.ACTIVE
        assert mutations[0].pothole.detection_count == 4

    def test_create_when_far_from_everything(self):
        existing = [pothole(1, 20.0, 85.0)]
        # ~10 m away.
        mutations = merge_into_registry(cluster([obs(20.00009, 85.0), obs(20.00009, 85.0, seconds=1, frame=1)]), existing)
        assert [m.kind for m in mutations] == ["create"]
        created = mutations[0].pothole
        assert created.id is None
        assert created.detection_count == 2
        assert created.status is PotholeStatus.ACTIVE
        assert (created.lat, created.lon) == (20.00009, 85.0)

    def test_active_takes_precedence_over_closer_repaired(self):
        existing = [
            pothole(1, 20.000018, 85.0),  # ~2 m, Active
            pothole(2, 20.000005, 85.0, status=PotholeStatus.REPAIRED),  # ~0.6 m
        ]
        mutations = merge_into_registry(cluster([obs(20.0, 85.0)]), existing)
        assert mutations[0].kind == "update"
        assert mutations[0].pothole.id == 1

    def test_distance_tie_prefers_smaller_id(self):
        existing = [
            pothole(9, 20.00001, 85.0),
            pothole(4, 20.00001, 85.0),
        ]
        mutations = merge_into_registry(cluster([obs(20.00001, 85.0)]), existing)
        assert mutations[0].pothole.id == 4

    def test_pool_evolves_within_batch(self):
        """Two same-spot clusters in one batch yield one create then one update."""
        far_apart = [
            cluster([obs(20.0, 85.0, seconds=0)])[0],
            cluster([obs(20.0, 85.0, seconds=30, frame=30)])[0],
        ]
        mutations = merge_into_registry(far_apart, existing=[])
        assert [m.kind for m in mutations] == ["create", "update"]
        assert mutations[1].pothole.detection_count == 2

    def test_absorb_max_severity_and_keeps_original_thumbnail(self):
        existing = [pothole(1, 20.0, 85.0, severity=SeverityGrade.MINOR, thumbnail="T0JE")]
        c = cluster([obs(20.0, 85.0, severity=SeverityGrade.SEVERE, thumbnail="QUJD")])
        mutations = merge_into_registry(c, existing)
        p = mutations[0].pothole
        assert p.severity is SeverityGrade.SEVERE
        assert p.thumbnail == "T0JE"

    def test_absorb_fills_missing_thumbnail(self):
        existing = [pothole(1, 20.0, 85.0, thumbnail=None)]
        mutations = merge_into_registry(cluster([obs(20.0, 85.0, thumbnail="QUJD")]), existing)
        assert mutations[0].pothole.thumbnail == "QUJD"

    def test_replay_is_update_not_create(self):
        """Re-ingesting the same batch must not mint duplicate potholes."""
        batch = cluster([obs(20.0, 85.0, seconds=i, frame=i) for i in range(3)])
        first = merge_into_registry(batch, existing=[])
        assert [m.kind for m in first] == ["create"]
        persisted = first[0].pothole
        persisted.id = 1
        second = merge_into_registry(batch, existing=[persisted])
        assert [m.kind for m in second] == ["update"]
        assert second[0].pothole.id == 1

    def test_existing_registry_objects_not_mutated(self):
        existing = [pothole(1, 20.0, 85.0, detection_count=3)]
        merge_into_registry(cluster([obs(20.0, 85.0)]), existing)
        assert existing[0].detection_count == 3

    def test_decisions_use_persisted_precision(self):
        # Unrounded centroid 20.0000024999 would be ~0.28 m from the pothole,
        # but decisions are made on the 5-decimal persisted value.
        existing = [pothole(1, 20.0, 85.0)]
        c = cluster([obs(20.0000024999, 85.0)])
        mutations = merge_into_registry(c, existing)
        assert mutations[0].kind == "update"
        assert c[0].persisted_centroid == (20.0, 85.0)

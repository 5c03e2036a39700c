"""HTTP API contract: auth, ingest, public GeoJSON, registry, reports."""

import json
from datetime import date, timedelta
from types import SimpleNamespace

import pytest
from fastapi.testclient import TestClient

from roadhealth.auth import hash_password
from roadhealth.dedupe import PotholeStatus
from roadhealth.service import create_app

from .conftest import box, detections_jsonl, frame, straight_track, utc
from .oracles import assert_valid_geojson
from .test_store import make_pothole, make_segment

PASSWORD = "correct-horse-battery"


@pytest.fixture
def api(make_config, webhook):
    config = make_config(webhook_url=webhook.url, ingest_rate_limit_per_hour=5)
    app = create_app(config)
    store = app.state.store
    store.create_account(
        "asha", hash_password(PASSWORD, salt=b"\x01" * 16), "authority", actor="system"
    )
    client = TestClient(app)
    yield SimpleNamespace(client=client, store=store, config=config, webhook=webhook)
    store.close()


@pytest.fixture
def token(api):
    resp = api.client.post(
        "/api/auth/login", json={"username": "asha", "password": PASSWORD}
    )
    assert resp.status_code == 200
    return resp.json()["token"]


def bearer(token):
    return {"Authorization": f"Bearer {token}"}


def ingest_fixture():
    """Three frames re-seeing one pothole on a short northbound drive."""
    frames = [
        frame(i, f"13-08-2025 12:00:5{i}", [box()]) for i in range(3)
    ]
    track = straight_track(utc(2025, 8, 13, 6, 30, 0), 60, 20.0, 85.0, dlat_per_s=1e-5)
    return detections_jsonl(frames).encode(), track.encode()


def upload(client, token, detections=None, gps=None, omit_gps=False):
    default_d, default_g = ingest_fixture()
    files = {"detections": ("d.jsonl", detections or default_d, "application/json")}
    if not omit_gps:
        files["gps"] = ("g.csv", gps or default_g, "text/csv")
    return client.post("/api/ingest", files=files, headers=bearer(token))


SEGMENT_BODY = {
    "start": {"lat": 20.0, "lon": 85.0},
    "end": {"lat": 20.00135, "lon": 85.0},
    "mode": "straight",
    "contract": {
        "contractor_name": "Shakti Infra",
        "contractor_contact": "ops@shakti.example",
        "construction_date": "2024-09-01",
        "budget": 500000.0,
        "warranty_end": "2026-01-15",
        "category": "arterial",
    },
}


class TestAuth:
    def test_login_issues_usable_token(self, api, token):
        assert len(token) == 64
        resp = api.client.post("/api/tick", headers=bearer(token))
        assert resp.status_code == 200

    def test_unknown_user_and_wrong_password_are_indistinguishable(self, api):
        wrong = api.client.post(
            "/api/auth/login", json={"username": "asha", "password": "nope"}
        )
        unknown = api.client.post(
            "/api/auth/login", json={"username": "ghost", "password": "nope"}
        )
        assert wrong.status_code == unknown.status_code == 401
        assert wrong.json() == unknown.json()

    def test_expired_token_rejected(self, api):
        account = api.store.get_account("asha")
        api.store.create_session(
            "stale-token", account, expires_at=api.config.now() - timedelta(seconds=1)
        )
        resp = api.client.post("/api/tick", headers=bearer("stale-token"))
        assert resp.status_code == 401

    def test_malformed_authorization_header(self, api):
        resp = api.client.post("/api/tick", headers={"Authorization": "Basic abc"})
        assert resp.status_code == 401


class TestAuthGate:
    MUTATIONS = [
        ("post", "/api/ingest", 401),
        ("post", "/api/segments", 401),
        ("patch", "/api/segments/1", 401),
        ("delete", "/api/segments/1", 401),
        ("post", "/api/segments/1/notify", 403),
        ("post", "/api/tick", 401),
    ]

    @pytest.mark.parametrize("method,path,expected", MUTATIONS)
    def test_every_mutation_requires_credentials(self, api, method, path, expected):
        resp = getattr(api.client, method)(path)
        assert resp.status_code == expected

    @pytest.mark.parametrize("method,path,expected", MUTATIONS)
    def test_garbage_token_equally_rejected(self, api, method, path, expected):
        resp = getattr(api.client, method)(path, headers=bearer("not-a-real-token"))
        assert resp.status_code == expected


class TestIngest:
    def test_fixture_creates_one_pothole(self, api, token):
        resp = upload(api.client, token)
        assert resp.status_code == 201
        body = resp.json()
        stats = body["statistics"]
        assert body["batch_id"] == 1
        assert stats["frames"] == 3
        assert stats["boxes"] == 3
        assert stats["potholes_created"] == 1
        assert len(api.store.list_potholes()) == 1

    def test_missing_gps_part_is_400(self, api, token):
        resp = upload(api.client, token, omit_gps=True)
        assert resp.status_code == 400

    def test_unparseable_gps_is_400_and_persists_nothing(self, api, token):
        resp = upload(api.client, token, gps=b"utc_iso,lat\nbroken")
        assert resp.status_code == 400
        assert resp.json()["detail"]["error"] == "MalformedRow"
        assert api.store.list_potholes() == []
        assert api.store.audit_records("ingest") == []

    def test_oversized_upload_is_413(self, make_config, webhook):
        config = make_config(webhook_url=webhook.url, max_upload_bytes=64)
        app = create_app(config)
        app.state.store.create_account(
            "asha", hash_password(PASSWORD, salt=b"\x01" * 16), "authority", actor="s"
        )
        client = TestClient(app)
        tok = client.post(
            "/api/auth/login", json={"username": "asha", "password": PASSWORD}
        ).json()["token"]
        resp = upload(client, tok)
        assert resp.status_code == 413
        app.state.store.close()

    def test_rate_limit_429_with_retry_after(self, make_config, webhook):
        config = make_config(webhook_url=webhook.url, ingest_rate_limit_per_hour=2)
        app = create_app(config)
        app.state.store.create_account(
            "asha", hash_password(PASSWORD, salt=b"\x01" * 16), "authority", actor="s"
        )
        client = TestClient(app)
        tok = client.post(
            "/api/auth/login", json={"username": "asha", "password": PASSWORD}
        ).json()["token"]
        assert upload(client, tok).status_code == 201
        assert upload(client, tok).status_code == 201
        third = upload(client, tok)
        assert third.status_code == 429
        assert third.headers["retry-after"] == "3600"
        app.state.store.close()


class TestPotholeQueries:
    def seed(self, api):
        api.store.insert_pothole(make_pothole(lat=20.1, lon=85.1), actor="seed")
        api.store.insert_pothole(
            make_pothole(lat=20.2, lon=85.2, status=PotholeStatus.REPAIRED), actor="seed"
        )
        api.store.insert_pothole(make_pothole(lat=25.0, lon=80.0), actor="seed")

    def test_default_filter_hides_repaired_markers(self, api):
        self.seed(api)
        doc = api.client.get("/api/potholes").json()
        assert_valid_geojson(doc)
        ids = {f["id"] for f in doc["features"]}
        assert ids == {"pothole:1", "pothole:3"}

    def test_status_all_and_repaired(self, api):
        self.seed(api)
        every = api.client.get("/api/potholes", params={"status": "all"}).json()
        assert len(every["features"]) == 3
        repaired = api.client.get("/api/potholes", params={"status": "repaired"}).json()
        assert [f["id"] for f in repaired["features"]] == ["pothole:2"]

    def test_bbox_filter(self, api):
        self.seed(api)
        doc = api.client.get(
            "/api/potholes", params={"bbox": "20.0,85.0,20.5,85.5"}
        ).json()
        assert [f["id"] for f in doc["features"]] == ["pothole:1"]

    def test_malformed_bbox_is_400(self, api):
        for bad in ("20,85,21", "21,85,20,86", "a,b,c,d"):
            resp = api.client.get("/api/potholes", params={"bbox": bad})
            assert resp.status_code == 400

    def test_time_window_filter(self, api):
        self.seed(api)
        resp = api.client.get(
            "/api/potholes",
            params={"from": "2025-08-13T06:30:00Z", "to": "2025-08-13T07:00:00Z"},
        )
        assert len(resp.json()["features"]) == 2
        empty = api.client.get("/api/potholes", params={"from": "2026-01-01T00:00:00Z"})
        assert empty.json()["features"] == []

    def test_bad_instant_is_400(self, api):
        resp = api.client.get("/api/potholes", params={"from": "yesterdayish"})
        assert resp.status_code == 400

    def test_media_type_and_etag_revalidation(self, api):
        self.seed(api)
        first = api.client.get("/api/potholes")
        assert first.headers["content-type"].startswith("application/geo+json")
        etag = first.headers["etag"]
        second = api.client.get("/api/potholes", headers={"If-None-Match": etag})
        assert second.status_code == 304
        assert second.content == b""
        # Any state change invalidates the tag.
        api.store.insert_pothole(make_pothole(lat=20.3, lon=85.3), actor="seed")
        third = api.client.get("/api/potholes", headers={"If-None-Match": etag})
        assert third.status_code == 200
        assert third.headers["etag"] != etag

    def test_export_includes_segments_and_potholes(self, api):
        self.seed(api)
        api.store.insert_segment(make_segment(), actor="seed")
        doc = api.client.get("/api/export").json()
        assert_valid_geojson(doc)
        kinds = {f["geometry"]["type"] for f in doc["features"]}
        assert kinds == {"Point", "LineString"}


class TestSegmentRegistry:
    def test_public_listing_never_leaks_contact(self, api):
        api.store.insert_segment(make_segment(contact="secret@contractor.example"), actor="s")
        body = api.client.get("/api/segments").text
        assert "secret@contractor.example" not in body
        assert "created_by" not in body

    def test_create_straight_segment(self, api, token):
        resp = api.client.post("/api/segments", json=SEGMENT_BODY, headers=bearer(token))
        assert resp.status_code == 201
        body = resp.json()
        assert body["id"] == 1
        assert body["health"] == "green"
        assert body["geometry"] == [[20.0, 85.0], [20.00135, 85.0]]
        assert body["contract"]["contractor_contact"] == "ops@shakti.example"
        assert body["created_by"] == "asha"
        assert 149.0 < body["length_m"] < 151.0

    def test_create_routed_segment_uses_provider(self, make_config, stub_server):
        config = make_config(routing_base_url=stub_server.url, webhook_url="")
        app = create_app(config)
        app.state.store.create_account(
            "asha", hash_password(PASSWORD, salt=b"\x01" * 16), "authority", actor="s"
        )
        client = TestClient(app)
        tok = client.post(
            "/api/auth/login", json={"username": "asha", "password": PASSWORD}
        ).json()["token"]
        stub_server.queue.append(
            (200, {
                "code": "Ok",
                "routes": [{"geometry": {"type": "LineString",
                                         "coordinates": [[85.0, 20.0], [85.001, 20.001]]}}],
            })
        )
        body = dict(SEGMENT_BODY, mode="routed")
        resp = client.post("/api/segments", json=body, headers=bearer(tok))
        assert resp.status_code == 201
        assert resp.json()["geometry"] == [[20.0, 85.0], [20.001, 85.001]]
        app.state.store.close()

    def test_create_with_unreachable_provider_is_502(self, make_config):
        config = make_config(routing_base_url="http://127.0.0.1:1", http_timeout_s=0.2)
        app = create_app(config)
        app.state.store.create_account(
            "asha", hash_password(PASSWORD, salt=b"\x01" * 16), "authority", actor="s"
        )
        client = TestClient(app)
        tok = client.post(
            "/api/auth/login", json={"username": "asha", "password": PASSWORD}
        ).json()["token"]
        resp = client.post(
            "/api/segments", json=dict(SEGMENT_BODY, mode="routed"), headers=bearer(tok)
        )
        assert resp.status_code == 502
        assert resp.json()["detail"]["error"] == "ProviderUnreachable"
        app.state.store.close()

    def test_create_invalid_contract_is_400(self, api, token):
        body = json.loads(json.dumps(SEGMENT_BODY))
        body["contract"]["warranty_end"] = "2023-01-01"
        resp = api.client.post("/api/segments", json=body, headers=bearer(token))
        assert resp.status_code == 400
        assert resp.json()["detail"]["error"] == "InvalidContract"

    def test_patch_moves_endpoint(self, api, token):
        api.client.post("/api/segments", json=SEGMENT_BODY, headers=bearer(token))
        resp = api.client.patch(
            "/api/segments/1",
            json={"end": {"lat": 20.0027, "lon": 85.0}, "mode": "straight"},
            headers=bearer(token),
        )
        assert resp.status_code == 200
        assert resp.json()["geometry"] == [[20.0, 85.0], [20.0027, 85.0]]
        assert 299.0 < resp.json()["length_m"] < 301.0

    def test_patch_unknown_is_404(self, api, token):
        resp = api.client.patch(
            "/api/segments/99", json={"mode": "straight"}, headers=bearer(token)
        )
        assert resp.status_code == 404

    def test_delete_detaches_and_reports(self, api, token):
        api.client.post("/api/segments", json=SEGMENT_BODY, headers=bearer(token))
        p = make_pothole(lat=20.0005, lon=85.0, segment_id=1)
        api.store.insert_pothole(p, actor="seed")
        resp = api.client.delete("/api/segments/1", headers=bearer(token))
        assert resp.status_code == 200
        assert resp.json() == {"deleted": 1}
        assert api.store.get_pothole(p.id).segment_id is None

    def test_delete_unknown_is_404(self, api, token):
        resp = api.client.delete("/api/segments/42", headers=bearer(token))
        assert resp.status_code == 404


class TestReportAndNotify:
    def seed_yellow_segment(self, api, token):
        resp = api.client.post("/api/segments", json=SEGMENT_BODY, headers=bearer(token))
        assert resp.status_code == 201
        assert upload(api.client, token).status_code == 201

    def test_report_shape_and_values(self, api, token):
        self.seed_yellow_segment(api, token)
        resp = api.client.get("/api/segments/1/report")
        assert resp.status_code == 200
        report = resp.json()
        assert report["health"] == "yellow"
        assert report["potholes"]["active"] == 1
        assert report["potholes"]["active_by_severity"]["moderate"] == 1
        assert report["warranty"]["status"] == "active"
        # Frozen clock 2025-08-13 against a 2026-01-15 deadline.
        assert report["warranty"]["days_to_deadline"] == 155
        assert 6.0 < report["density_per_km"] < 7.5
        assert report["segment"]["contract"]["contractor_name"] == "Shakti Infra"
        assert "contractor_contact" not in json.dumps(report)
        assert report["alerts"][0]["transition"] == "green->yellow"
        assert report["alerts"][0]["delivery_status"] == "sent"

    def test_report_unknown_is_404(self, api):
        assert api.client.get("/api/segments/9/report").status_code == 404

    def test_transition_alert_reaches_webhook(self, api, token):
        self.seed_yellow_segment(api, token)
        posts = [r for r in api.webhook.requests if r[0] == "POST"]
        assert len(posts) == 1
        payload = json.loads(posts[0][2])
        assert payload["transition"] == "green->yellow"
        assert payload["segment_id"] == 1
        assert payload["health"] == "yellow"

    def test_notify_pending_then_sent_then_suppressed(self, api, token):
        self.seed_yellow_segment(api, token)
        first = api.client.post("/api/segments/1/notify", headers=bearer(token))
        assert first.status_code == 200
        body = first.json()
        assert body["suppressed"] is False
        assert body["event"]["transition"] == "manual"
        assert body["event"]["delivery_status"] == "pending"

        stored = [e for e in api.store.list_alerts(segment_id=1) if e.transition == "manual"]
        assert len(stored) == 1
        assert stored[0].delivery_status.value == "sent"

        second = api.client.post("/api/segments/1/notify", headers=bearer(token))
        assert second.json() == {"suppressed": True}
        assert len([e for e in api.store.list_alerts(segment_id=1) if e.transition == "manual"]) == 1

    def test_notify_unknown_segment_is_404(self, api, token):
        resp = api.client.post("/api/segments/77/notify", headers=bearer(token))
        assert resp.status_code == 404

    def test_tick_endpoint_returns_summary(self, api, token):
        self.seed_yellow_segment(api, token)
        resp = api.client.post("/api/tick", headers=bearer(token))
        assert resp.status_code == 200
        assert resp.json() == {"segments_evaluated": 1, "transitions": 0, "events_created": 0}

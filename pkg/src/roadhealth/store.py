"""Single-file sqlite persistence with audit trail and GeoJSON interchange.

One database file holds potholes, segments, alert events, ingest batches,
accounts, sessions, and an append-only audit log. Writers are serialized
through one re-entrant lock so a multi-step pipeline commits atomically;
reads go through the same lock, which is plenty at the scale of a city
road-works office.

Every mutating method appends an audit record inside the same transaction:
there is no code path that changes state without leaving a trace.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import date, datetime, timezone
from typing import Callable, Iterator

from .dedupe import Pothole, PotholeStatus
from .detection import SeverityGrade
from .errors import (
    ConflictingWrite,
    DuplicateUsername,
    MalformedBBox,
    NotFound,
)
from .governance import AlertEvent, DeliveryStatus, HealthState
from .segments import ContractMetadata, RoadSegment

_MIGRATIONS: list[tuple[int, str]] = [
    (
        1,
        """
        CREATE TABLE meta (
            key TEXT PRIMARY KEY,
            value TEXT NOT NULL
        );
        CREATE TABLE accounts (
            id INTEGER PRIMARY KEY,
            username TEXT NOT NULL UNIQUE,
            password_digest TEXT NOT NULL,
            role TEXT NOT NULL,
            created_at TEXT NOT NULL
        );
        CREATE TABLE sessions (
            token TEXT PRIMARY KEY,
            account_id INTEGER NOT NULL REFERENCES accounts(id),
            expires_at TEXT NOT NULL
        );
        CREATE TABLE segments (
            id INTEGER PRIMARY KEY,
            geometry TEXT NOT NULL,
            contractor_name TEXT NOT NULL,
            contractor_contact TEXT NOT NULL,
            construction_date TEXT NOT NULL,
            budget REAL NOT NULL,
            warranty_end TEXT NOT NULL,
            category TEXT,
            health TEXT NOT NULL,
            length_m REAL NOT NULL,
            created_by TEXT,
            version INTEGER NOT NULL DEFAULT 1
        );
        CREATE TABLE potholes (
            id INTEGER PRIMARY KEY,
            lat REAL NOT NULL,
            lon REAL NOT NULL,
            severity TEXT NOT NULL,
            status TEXT NOT NULL,
            first_seen TEXT NOT NULL,
            last_seen TEXT NOT NULL,
            detection_count INTEGER NOT NULL,
            thumbnail TEXT,
            segment_id INTEGER REFERENCES segments(id),
            version INTEGER NOT NULL DEFAULT 1
        );
        CREATE TABLE alert_events (
            id INTEGER PRIMARY KEY,
            segment_id INTEGER NOT NULL,
            transition TEXT NOT NULL,
            recipients TEXT NOT NULL,
            message TEXT NOT NULL,
            health TEXT NOT NULL,
            contractor TEXT NOT NULL,
            created_at TEXT NOT NULL,
            delivery_status TEXT NOT NULL,
            idempotency_key TEXT NOT NULL,
            attempts INTEGER NOT NULL DEFAULT 0
        );
        CREATE TABLE batches (
            id INTEGER PRIMARY KEY,
            uploaded_at TEXT NOT NULL,
            detections_digest TEXT NOT NULL,
            gps_digest TEXT NOT NULL,
            statistics TEXT NOT NULL,
            created_by TEXT
        );
        CREATE TABLE audit (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            actor TEXT NOT NULL,
            action TEXT NOT NULL,
            subject TEXT NOT NULL,
            at TEXT NOT NULL,
            detail TEXT NOT NULL
        );
        CREATE INDEX idx_potholes_status ON potholes(status);
        CREATE INDEX idx_potholes_segment ON potholes(segment_id);
        CREATE INDEX idx_alerts_key ON alert_events(idempotency_key);
        """,
    ),
]


def format_utc(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def parse_utc(text: str) -> datetime:
    return datetime.fromisoformat(text.replace("Z", "+00:00")).astimezone(timezone.utc)


def canonical_geojson_bytes(doc: dict) -> bytes:
    """One serialization for files and HTTP bodies, so exports compare equal."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass
class Account:
    id: int | None
    username: str
    password_digest: str
    role: str
    created_at: datetime


class Store:
    def __init__(self, path: str, now_fn: Callable[[], datetime] | None = None):
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.isolation_level = None  # explicit BEGIN/COMMIT
        self._lock = threading.RLock()
        self._depth = 0
        self._now = now_fn or (lambda: datetime.now(timezone.utc))
        self._migrate()

    def close(self) -> None:
        self._conn.close()

    # --- transactions ---

    @contextmanager
    def transaction(self) -> Iterator[None]:
        """Re-entrant write transaction; nested enters join the outer one."""
        self._lock.acquire()
        self._depth += 1
        try:
            if self._depth == 1:
                self._conn.execute("BEGIN IMMEDIATE")
            yield
            if self._depth == 1:
                self._conn.execute("COMMIT")
        except BaseException:
            if self._depth == 1:
                self._conn.execute("ROLLBACK")
            raise
        finally:
            self._depth -= 1
            self._lock.release()

    def _execute(self, sql: str, params: tuple = ()) -> sqlite3.Cursor:
        with self._lock:
            return self._conn.execute(sql, params)

    def _migrate(self) -> None:
        # executescript commits on its own, so migrations run outside
        # transaction(); they happen once, before any caller sees the store.
        with self._lock:
            row = self._conn.execute(
                "SELECT name FROM sqlite_master WHERE type='table' AND name='meta'"
            ).fetchone()
            current = 0
            if row is not None:
                got = self._conn.execute(
                    "SELECT value FROM meta WHERE key='schema_version'"
                ).fetchone()
                current = int(got["value"]) if got else 0
            for version, script in _MIGRATIONS:
                if version > current:
                    self._conn.executescript(script)
                    self._conn.execute(
                        "INSERT OR REPLACE INTO meta(key, value) VALUES('schema_version', ?)",
                        (str(version),),
                    )

    @property
    def schema_version(self) -> int:
        row = self._execute("SELECT value FROM meta WHERE key='schema_version'").fetchone()
        return int(row["value"]) if row else 0

    # --- audit ---

    def audit(self, actor: str, action: str, subject: str, detail: dict | None = None) -> int:
        cur = self._execute(
            "INSERT INTO audit(actor, action, subject, at, detail) VALUES(?,?,?,?,?)",
            (actor, action, subject, format_utc(self._now()), json.dumps(detail or {})),
        )
        return cur.lastrowid

    def audit_records(self, action: str | None = None) -> list[dict]:
        sql = "SELECT id, actor, action, subject, at, detail FROM audit"
        params: tuple = ()
        if action is not None:
            sql += " WHERE action = ?"
            params = (action,)
        sql += " ORDER BY id"
        return [
            {
                "id": r["id"],
                "actor": r["actor"],
                "action": r["action"],
                "subject": r["subject"],
                "at": r["at"],
                "detail": json.loads(r["detail"]),
            }
            for r in self._execute(sql, params).fetchall()
        ]

    def export_audit_jsonl(self) -> str:
        lines = [json.dumps(rec, sort_keys=True) for rec in self.audit_records()]
        return "\n".join(lines) + ("\n" if lines else "")

    # --- accounts and sessions ---

    def create_account(
        self, username: str, password_digest: str, role: str, actor: str
    ) -> Account:
        created_at = self._now()
        with self.transaction():
            try:
                cur = self._conn.execute(
                    "INSERT INTO accounts(username, password_digest, role, created_at)"
                    " VALUES(?,?,?,?)",
                    (username, password_digest, role, format_utc(created_at)),
                )
            except sqlite3.IntegrityError as exc:
                raise DuplicateUsername(username) from exc
            account_id = cur.lastrowid
            self.audit(actor, "account.create", f"account:{account_id}", {"role": role})
        return Account(account_id, username, password_digest, role, created_at)

    def get_account(self, username: str) -> Account | None:
        row = self._execute(
            "SELECT * FROM accounts WHERE username = ?", (username,)
        ).fetchone()
        if row is None:
            return None
        return Account(
            row["id"], row["username"], row["password_digest"], row["role"],
            parse_utc(row["created_at"]),
        )

    def create_session(self, token: str, account: Account, expires_at: datetime) -> None:
        with self.transaction():
            self._conn.execute(
                "INSERT INTO sessions(token, account_id, expires_at) VALUES(?,?,?)",
                (token, account.id, format_utc(expires_at)),
            )
            self.audit(account.username, "auth.login", f"account:{account.id}", {})

    def resolve_token(self, token: str) -> Account | None:
        row = self._execute(
            "SELECT a.*, s.expires_at FROM sessions s JOIN accounts a ON a.id = s.account_id"
            " WHERE s.token = ?",
            (token,),
        ).fetchone()
        if row is None:
            return None
        if parse_utc(row["expires_at"]) <= self._now():
            return None
        return Account(
            row["id"], row["username"], row["password_digest"], row["role"],
            parse_utc(row["created_at"]),
        )

    # --- potholes ---

    def insert_pothole(self, p: Pothole, actor: str, action: str = "pothole.create") -> Pothole:
        with self.transaction():
            cur = self._conn.execute(
                "INSERT INTO potholes(id, lat, lon, severity, status, first_seen,"
                " last_seen, detection_count, thumbnail, segment_id, version)"
                " VALUES(?,?,?,?,?,?,?,?,?,?,?)",
                (
                    p.id, p.lat, p.lon, p.severity.label, p.status.value,
                    format_utc(p.first_seen), format_utc(p.last_seen),
                    p.detection_count, p.thumbnail, p.segment_id, p.version,
                ),
            )
            p.id = cur.lastrowid if p.id is None else p.id
            self.audit(actor, action, f"pothole:{p.id}", {"severity": p.severity.label})
        return p

    def update_pothole(
        self, p: Pothole, actor: str, action: str = "pothole.update", detail: dict | None = None
    ) -> Pothole:
        with self.transaction():
            cur = self._conn.execute(
                "UPDATE potholes SET lat=?, lon=?, severity=?, status=?, first_seen=?,"
                " last_seen=?, detection_count=?, thumbnail=?, segment_id=?, version=version+1"
                " WHERE id=? AND version=?",
                (
                    p.lat, p.lon, p.severity.label, p.status.value,
                    format_utc(p.first_seen), format_utc(p.last_seen),
                    p.detection_count, p.thumbnail, p.segment_id, p.id, p.version,
                ),
            )
            if cur.rowcount == 0:
                exists = self._conn.execute(
                    "SELECT 1 FROM potholes WHERE id=?", (p.id,)
                ).fetchone()
                if exists is None:
                    raise NotFound(f"pothole {p.id}")
                raise ConflictingWrite(f"pothole {p.id} version {p.version} is stale")
            p.version += 1
            self.audit(actor, action, f"pothole:{p.id}", detail)
        return p

    def get_pothole(self, pothole_id: int) -> Pothole:
        row = self._execute("SELECT * FROM potholes WHERE id=?", (pothole_id,)).fetchone()
        if row is None:
            raise NotFound(f"pothole {pothole_id}")
        return _pothole_from_row(row)

    def list_potholes(self, status: PotholeStatus | None = None) -> list[Pothole]:
        if status is None:
            rows = self._execute("SELECT * FROM potholes ORDER BY id").fetchall()
        else:
            rows = self._execute(
                "SELECT * FROM potholes WHERE status=? ORDER BY id", (status.value,)
            ).fetchall()
        return [_pothole_from_row(r) for r in rows]

    def count_active_potholes(self, segment_id: int) -> int:
        row = self._execute(
            "SELECT COUNT(*) AS n FROM potholes WHERE segment_id=? AND status='active'",
            (segment_id,),
        ).fetchone()
        return int(row["n"])

    def query_potholes(
        self,
        bbox: tuple[float, float, float, float] | None = None,
        status: str | None = None,
        time_from: datetime | None = None,
        time_to: datetime | None = None,
        category: str | None = None,
    ) -> list[Pothole]:
        """Conjunction of the given filters; omitted filters match everything.

        ``bbox`` is (min_lat, min_lon, max_lat, max_lon). The time window
        selects on last_seen, inclusive at both ends. ``category`` matches the
        attributed segment's road category.
        """
        sql = "SELECT p.* FROM potholes p"
        clauses: list[str] = []
        params: list = []
        if category is not None:
            sql += " JOIN segments s ON s.id = p.segment_id"
            clauses.append("s.category = ?")
            params.append(category)
        if bbox is not None:
            min_lat, min_lon, max_lat, max_lon = _validated_bbox(bbox)
            clauses.append("p.lat BETWEEN ? AND ? AND p.lon BETWEEN ? AND ?")
            params += [min_lat, max_lat, min_lon, max_lon]
        if status is not None:
            clauses.append("p.status = ?")
            params.append(PotholeStatus(status).value)
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY p.id"
        found = [_pothole_from_row(r) for r in self._execute(sql, tuple(params)).fetchall()]
        if time_from is not None:
            found = [p for p in found if p.last_seen >= time_from]
        if time_to is not None:
            found = [p for p in found if p.last_seen <= time_to]
        return found

    # --- segments ---

    def insert_segment(self, s: RoadSegment, actor: str) -> RoadSegment:
        with self.transaction():
            cur = self._conn.execute(
                "INSERT INTO segments(id, geometry, contractor_name, contractor_contact,"
                " construction_date, budget, warranty_end, category, health, length_m,"
                " created_by, version) VALUES(?,?,?,?,?,?,?,?,?,?,?,?)",
                (
                    s.id, json.dumps(s.geometry), s.contract.contractor_name,
                    s.contract.contractor_contact, s.contract.construction_date.isoformat(),
                    s.contract.budget, s.contract.warranty_end.isoformat(),
                    s.contract.category, s.health.value_name, s.length_m,
                    s.created_by, s.version,
                ),
            )
            s.id = cur.lastrowid if s.id is None else s.id
            self.audit(
                actor, "segment.create", f"segment:{s.id}",
                {"contractor": s.contract.contractor_name, "length_m": round(s.length_m, 1)},
            )
        return s

    def update_segment(
        self, s: RoadSegment, actor: str, action: str = "segment.update", detail: dict | None = None
    ) -> RoadSegment:
        with self.transaction():
            cur = self._conn.execute(
                "UPDATE segments SET geometry=?, contractor_name=?, contractor_contact=?,"
                " construction_date=?, budget=?, warranty_end=?, category=?, health=?,"
                " length_m=?, version=version+1 WHERE id=? AND version=?",
                (
                    json.dumps(s.geometry), s.contract.contractor_name,
                    s.contract.contractor_contact, s.contract.construction_date.isoformat(),
                    s.contract.budget, s.contract.warranty_end.isoformat(),
                    s.contract.category, s.health.value_name, s.length_m,
                    s.id, s.version,
                ),
            )
            if cur.rowcount == 0:
                exists = self._conn.execute(
                    "SELECT 1 FROM segments WHERE id=?", (s.id,)
                ).fetchone()
                if exists is None:
                    raise NotFound(f"segment {s.id}")
                raise ConflictingWrite(f"segment {s.id} version {s.version} is stale")
            s.version += 1
            self.audit(actor, action, f"segment:{s.id}", detail)
        return s

    def get_segment(self, segment_id: int) -> RoadSegment:
        row = self._execute("SELECT * FROM segments WHERE id=?", (segment_id,)).fetchone()
        if row is None:
            raise NotFound(f"segment {segment_id}")
        return _segment_from_row(row)

    def list_segments(self, category: str | None = None) -> list[RoadSegment]:
        if category is None:
            rows = self._execute("SELECT * FROM segments ORDER BY id").fetchall()
        else:
            rows = self._execute(
                "SELECT * FROM segments WHERE category=? ORDER BY id", (category,)
            ).fetchall()
        return [_segment_from_row(r) for r in rows]

    def delete_segment(self, segment_id: int, actor: str) -> None:
        """Remove a segment and detach its potholes in the same transaction."""
        with self.transaction():
            exists = self._conn.execute(
                "SELECT 1 FROM segments WHERE id=?", (segment_id,)
            ).fetchone()
            if exists is None:
                raise NotFound(f"segment {segment_id}")
            cur = self._conn.execute(
                "UPDATE potholes SET segment_id=NULL, version=version+1 WHERE segment_id=?",
                (segment_id,),
            )
            detached = cur.rowcount
            self._conn.execute("DELETE FROM segments WHERE id=?", (segment_id,))
            self.audit(
                actor, "segment.delete", f"segment:{segment_id}",
                {"detached_potholes": detached},
            )

    # --- alert events ---

    def insert_alert(self, event: AlertEvent, actor: str) -> AlertEvent:
        with self.transaction():
            cur = self._conn.execute(
                "INSERT INTO alert_events(segment_id, transition, recipients, message,"
                " health, contractor, created_at, delivery_status, idempotency_key, attempts)"
                " VALUES(?,?,?,?,?,?,?,?,?,?)",
                (
                    event.segment_id, event.transition, json.dumps(event.recipients),
                    event.message, event.health, event.contractor,
                    format_utc(event.created_at), event.delivery_status.value,
                    event.idempotency_key, event.attempts,
                ),
            )
            event.id = cur.lastrowid
            self.audit(
                actor, "alert.create", f"alert:{event.id}",
                {"segment_id": event.segment_id, "transition": event.transition},
            )
        return event

    def update_alert_delivery(self, event: AlertEvent, actor: str = "system") -> None:
        with self.transaction():
            self._conn.execute(
                "UPDATE alert_events SET delivery_status=?, attempts=? WHERE id=?",
                (event.delivery_status.value, event.attempts, event.id),
            )
            self.audit(
                actor, "alert.dispatch", f"alert:{event.id}",
                {"status": event.delivery_status.value, "attempts": event.attempts},
            )

    def list_alerts(
        self,
        segment_id: int | None = None,
        delivery_status: DeliveryStatus | None = None,
    ) -> list[AlertEvent]:
        clauses, params = [], []
        if segment_id is not None:
            clauses.append("segment_id=?")
            params.append(segment_id)
        if delivery_status is not None:
            clauses.append("delivery_status=?")
            params.append(delivery_status.value)
        sql = "SELECT * FROM alert_events"
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY id"
        return [_alert_from_row(r) for r in self._execute(sql, tuple(params)).fetchall()]

    def active_alert_keys(self) -> set[str]:
        """Keys that suppress duplicates: anything pending or already sent."""
        rows = self._execute(
            "SELECT idempotency_key FROM alert_events WHERE delivery_status IN ('pending','sent')"
        ).fetchall()
        return {r["idempotency_key"] for r in rows}

    # --- ingest batches ---

    def insert_batch(
        self,
        uploaded_at: datetime,
        detections_digest: str,
        gps_digest: str,
        statistics: dict,
        created_by: str,
    ) -> int:
        with self.transaction():
            cur = self._conn.execute(
                "INSERT INTO batches(uploaded_at, detections_digest, gps_digest,"
                " statistics, created_by) VALUES(?,?,?,?,?)",
                (
                    format_utc(uploaded_at), detections_digest, gps_digest,
                    json.dumps(statistics), created_by,
                ),
            )
            batch_id = cur.lastrowid
            self.audit(
                created_by, "ingest", f"batch:{batch_id}",
                {"detections_digest": detections_digest, "gps_digest": gps_digest},
            )
            return batch_id

    def finalize_batch(self, batch_id: int, statistics: dict) -> None:
        with self.transaction():
            self._conn.execute(
                "UPDATE batches SET statistics=? WHERE id=?",
                (json.dumps(statistics), batch_id),
            )

    def get_batch(self, batch_id: int) -> dict:
        row = self._execute("SELECT * FROM batches WHERE id=?", (batch_id,)).fetchone()
        if row is None:
            raise NotFound(f"batch {batch_id}")
        return {
            "id": row["id"],
            "uploaded_at": row["uploaded_at"],
            "detections_digest": row["detections_digest"],
            "gps_digest": row["gps_digest"],
            "statistics": json.loads(row["statistics"]),
            "created_by": row["created_by"],
        }

    def count_batches_since(self, created_by: str, since: datetime) -> int:
        rows = self._execute(
            "SELECT uploaded_at FROM batches WHERE created_by=?", (created_by,)
        ).fetchall()
        return sum(1 for r in rows if parse_utc(r["uploaded_at"]) >= since)

    # --- GeoJSON interchange ---

    def export_geojson(
        self,
        potholes: list[Pothole] | None = None,
        segments: list[RoadSegment] | None = None,
        include_private: bool = False,
    ) -> dict:
        """FeatureCollection of potholes (Points) and segments (LineStrings).

        Coordinates follow the GeoJSON axis order: [lon, lat]. The public
        form omits contractor contact details and account names; pass
        ``include_private`` for a lossless interchange document.
        """
        if potholes is None:
            potholes = self.list_potholes()
        if segments is None:
            segments = self.list_segments()
        features: list[dict] = []
        for p in potholes:
            features.append(
                {
                    "type": "Feature",
                    "id": f"pothole:{p.id}",
                    "geometry": {"type": "Point", "coordinates": [p.lon, p.lat]},
                    "properties": {
                        "severity": p.severity.label,
                        "status": p.status.value,
                        "first_seen": format_utc(p.first_seen),
                        "last_seen": format_utc(p.last_seen),
                        "detection_count": p.detection_count,
                        "segment_id": p.segment_id,
                        "thumbnail": p.thumbnail,
                    },
                }
            )
        for s in segments:
            properties = {
                "health": s.health.value_name,
                "contractor_name": s.contract.contractor_name,
                "construction_date": s.contract.construction_date.isoformat(),
                "budget": s.contract.budget,
                "warranty_end": s.contract.warranty_end.isoformat(),
                "category": s.contract.category,
                "length_m": s.length_m,
            }
            if include_private:
                properties["contractor_contact"] = s.contract.contractor_contact
                properties["created_by"] = s.created_by
            features.append(
                {
                    "type": "Feature",
                    "id": f"segment:{s.id}",
                    "geometry": {
                        "type": "LineString",
                        "coordinates": [[lon, lat] for lat, lon in s.geometry],
                    },
                    "properties": properties,
                }
            )
        return {"type": "FeatureCollection", "features": features}

    def import_geojson(self, doc: dict, actor: str) -> dict:
        """Load a previously exported FeatureCollection, preserving ids."""
        if doc.get("type") != "FeatureCollection":
            raise ValueError("expected a FeatureCollection")
        imported = {"potholes": 0, "segments": 0}
        with self.transaction():
            for feature in doc.get("features", []):
                kind, _, raw_id = str(feature.get("id", "")).partition(":")
                props = feature.get("properties", {})
                geom = feature.get("geometry", {})
                if kind == "pothole":
                    lon, lat = geom["coordinates"]
                    p = Pothole(
                        id=int(raw_id),
                        lat=lat,
                        lon=lon,
                        severity=SeverityGrade.from_label(props["severity"]),
                        status=PotholeStatus(props["status"]),
                        first_seen=parse_utc(props["first_seen"]),
                        last_seen=parse_utc(props["last_seen"]),
                        detection_count=int(props["detection_count"]),
                        thumbnail=props.get("thumbnail"),
                        segment_id=props.get("segment_id"),
                    )
                    self.insert_pothole(p, actor=actor, action="pothole.import")
                    imported["potholes"] += 1
                elif kind == "segment":
                    contract = ContractMetadata(
                        contractor_name=props["contractor_name"],
                        contractor_contact=props.get("contractor_contact", ""),
                        construction_date=date.fromisoformat(props["construction_date"]),
                        budget=float(props["budget"]),
                        warranty_end=date.fromisoformat(props["warranty_end"]),
                        category=props.get("category"),
                    )
                    s = RoadSegment(
                        id=int(raw_id),
                        geometry=[(lat, lon) for lon, lat in geom["coordinates"]],
                        contract=contract,
                        health=HealthState.from_name(props["health"]),
                        length_m=float(props["length_m"]),
                        created_by=props.get("created_by"),
                    )
                    self.insert_segment(s, actor=actor)
                    imported["segments"] += 1
        return imported


def _validated_bbox(bbox: tuple[float, float, float, float]) -> tuple[float, float, float, float]:
    try:
        min_lat, min_lon, max_lat, max_lon = (float(v) for v in bbox)
    except (TypeError, ValueError) as exc:
        raise MalformedBBox(str(exc)) from exc
    if not (-90 <= min_lat <= max_lat <= 90) or not (-180 <= min_lon <= max_lon <= 180):
        raise MalformedBBox(f"bbox not well ordered or out of range: {bbox}")
    return min_lat, min_lon, max_lat, max_lon


def _pothole_from_row(row: sqlite3.Row) -> Pothole:
    return Pothole(
        id=row["id"],
        lat=row["lat"],
        lon=row["lon"],
        severity=SeverityGrade.from_label(row["severity"]),
        status=PotholeStatus(row["status"]),
        first_seen=parse_utc(row["first_seen"]),
        last_seen=parse_utc(row["last_seen"]),
        detection_count=row["detection_count"],
        thumbnail=row["thumbnail"],
        segment_id=row["segment_id"],
        version=row["version"],
    )


def _segment_from_row(row: sqlite3.Row) -> RoadSegment:
    contract = ContractMetadata(
        contractor_name=row["contractor_name"],
        contractor_contact=row["contractor_contact"],
        construction_date=date.fromisoformat(row["construction_date"]),
        budget=row["budget"],
        warranty_end=date.fromisoformat(row["warranty_end"]),
        category=row["category"],
    )
    return RoadSegment(
        id=row["id"],
        geometry=[(lat, lon) for lat, lon in json.loads(row["geometry"])],
        contract=contract,
        health=HealthState.from_name(row["health"]),
        length_m=row["length_m"],
        created_by=row["created_by"],
        version=row["version"],
    )


def _alert_from_row(row: sqlite3.Row) -> AlertEvent:
    return AlertEvent(
        id=row["id"],
        segment_id=row["segment_id"],
        transition=row["transition"],
        recipients=json.loads(row["recipients"]),
        message=row["message"],
        health=row["health"],
        contractor=row["contractor"],
        created_at=parse_utc(row["created_at"]),
        delivery_status=DeliveryStatus(row["delivery_status"]),
        idempotency_key=row["idempotency_key"],
        attempts=row["attempts"],
    )

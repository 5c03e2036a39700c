"""HTTP API over the store: ingest, query, registry edits, reports, alerts.

Reads are public and serve GeoJSON with ETag validators; every mutation
requires a bearer token from /api/auth/login. Public responses never include
contractor contact addresses or account data.
"""

from __future__ import annotations

import hashlib
from datetime import date, datetime, timedelta, timezone

from fastapi import Depends, FastAPI, HTTPException, Query, Request, Response, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import auth, pipeline, segments as segreg
from .config import Config
from .errors import (
    ConflictingWrite,
    GpsLogError,
    InvalidContract,
    MalformedBBox,
    MalformedDetectionLine,
    NoRoute,
    NotFound,
    ProviderUnreachable,
    RoadHealthError,
)
from .governance import run_deadline_tick
from .store import Account, Store, canonical_geojson_bytes, format_utc


class LoginBody(BaseModel):
    username: str
    password: str


class Coord(BaseModel):
    lat: float
    lon: float


class ContractBody(BaseModel):
    contractor_name: str
    contractor_contact: str
    construction_date: date
    budget: float
    warranty_end: date
    category: str | None = None

    def to_domain(self) -> segreg.ContractMetadata:
        return segreg.ContractMetadata(
            contractor_name=self.contractor_name,
            contractor_contact=self.contractor_contact,
            construction_date=self.construction_date,
            budget=self.budget,
            warranty_end=self.warranty_end,
            category=self.category,
        )


class SegmentCreateBody(BaseModel):
    start: Coord
    end: Coord
    contract: ContractBody
    mode: str = "routed"
    fallback_straight: bool = False


class SegmentPatchBody(BaseModel):
    start: Coord | None = None
    end: Coord | None = None
    contract: ContractBody | None = None
    mode: str = "routed"
    fallback_straight: bool = False


def create_app(config: Config, store: Store | None = None) -> FastAPI:
    app = FastAPI(title="road health service", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.store = store if store is not None else Store(config.store_path, now_fn=config.now)

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        # Missing upload parts and malformed bodies are client errors: 400.
        return JSONResponse(
            status_code=400,
            content={"detail": {"error": "ValidationError", "message": str(exc.errors())}},
        )

    def get_store() -> Store:
        return app.state.store

    def require_account(request: Request) -> Account:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise HTTPException(status_code=401, detail="authentication required")
        account = app.state.store.resolve_token(header[7:].strip())
        if account is None:
            raise HTTPException(status_code=401, detail="invalid or expired token")
        return account

    # --- auth ---

    @app.post("/api/auth/login")
    def login(body: LoginBody):
        account = app.state.store.get_account(body.username)
        # Unknown users still pay for one scrypt derivation, and the error
        # body is identical either way: no username oracle.
        digest = account.password_digest if account else auth.DUMMY_DIGEST
        ok = auth.verify_password(body.password, digest)
        if account is None or not ok:
            raise HTTPException(status_code=401, detail="invalid credentials")
        token = auth.new_token()
        expires_at = config.now() + timedelta(seconds=config.token_ttl_s)
        app.state.store.create_session(token, account, expires_at)
        return {"token": token, "expires_at": format_utc(expires_at)}

    # --- ingest ---

    @app.post("/api/ingest", status_code=201)
    async def ingest(
        detections: UploadFile,
        gps: UploadFile,
        account: Account = Depends(require_account),
    ):
        store = get_store()
        window_start = config.now() - timedelta(hours=1)
        if (
            store.count_batches_since(account.username, window_start)
            >= config.ingest_rate_limit_per_hour
        ):
            raise HTTPException(
                status_code=429,
                detail="ingest rate limit reached",
                headers={"Retry-After": "3600"},
            )
        detections_data = await detections.read()
        gps_data = await gps.read()
        if len(detections_data) > config.max_upload_bytes or len(gps_data) > config.max_upload_bytes:
            raise HTTPException(status_code=413, detail="upload too large")
        try:
            result = pipeline.run_ingest(
                store, config, detections_data, gps_data, actor=account.username
            )
        except (MalformedDetectionLine, GpsLogError, RoadHealthError) as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": type(exc).__name__, "message": str(exc)},
            ) from exc
        return {"batch_id": result.batch_id, "statistics": result.statistics}

    # --- public map data ---

    @app.get("/api/potholes")
    def potholes_geojson(
        request: Request,
        bbox: str | None = None,
        status: str = "active",
        category: str | None = None,
        time_from: str | None = Query(None, alias="from"),
        time_to: str | None = Query(None, alias="to"),
    ):
        store = get_store()
        try:
            parsed_bbox = _parse_bbox(bbox)
            found = store.query_potholes(
                bbox=parsed_bbox,
                status=None if status == "all" else status,
                time_from=_parse_instant(time_from),
                time_to=_parse_instant(time_to),
                category=category,
            )
        except (MalformedBBox, ValueError) as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": type(exc).__name__, "message": str(exc)},
            ) from exc
        doc = store.export_geojson(potholes=found, segments=[])
        return _geojson_response(request, doc)

    @app.get("/api/segments")
    def segments_geojson(request: Request, category: str | None = None):
        store = get_store()
        doc = store.export_geojson(
            potholes=[], segments=store.list_segments(category=category)
        )
        return _geojson_response(request, doc)

    @app.get("/api/export")
    def export_geojson(request: Request):
        doc = get_store().export_geojson()
        return _geojson_response(request, doc)

    # --- segment registry ---

    @app.post("/api/segments", status_code=201)
    def create_segment(body: SegmentCreateBody, account: Account = Depends(require_account)):
        try:
            segment = segreg.create_segment(
                get_store(),
                config,
                start=(body.start.lat, body.start.lon),
                end=(body.end.lat, body.end.lon),
                contract=body.contract.to_domain(),
                mode=body.mode,
                created_by=account.username,
                fallback_straight=body.fallback_straight,
            )
        except (InvalidContract, ValueError) as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": type(exc).__name__, "message": str(exc)},
            ) from exc
        except (ProviderUnreachable, NoRoute) as exc:
            raise HTTPException(
                status_code=502,
                detail={"error": type(exc).__name__, "message": str(exc)},
            ) from exc
        return _segment_json(segment, include_private=True)

    @app.patch("/api/segments/{segment_id}")
    def patch_segment(
        segment_id: int,
        body: SegmentPatchBody,
        account: Account = Depends(require_account),
    ):
        try:
            segment = segreg.edit_segment(
                get_store(),
                config,
                segment_id,
                new_start=(body.start.lat, body.start.lon) if body.start else None,
                new_end=(body.end.lat, body.end.lon) if body.end else None,
                new_contract=body.contract.to_domain() if body.contract else None,
                mode=body.mode,
                actor=account.username,
                fallback_straight=body.fallback_straight,
            )
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except (InvalidContract, ValueError) as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": type(exc).__name__, "message": str(exc)},
            ) from exc
        except ConflictingWrite as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except (ProviderUnreachable, NoRoute) as exc:
            raise HTTPException(
                status_code=502,
                detail={"error": type(exc).__name__, "message": str(exc)},
            ) from exc
        return _segment_json(segment, include_private=True)

    @app.delete("/api/segments/{segment_id}")
    def remove_segment(segment_id: int, account: Account = Depends(require_account)):
        try:
            segreg.delete_segment(get_store(), config, segment_id, actor=account.username)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {"deleted": segment_id}

    # --- reports and notifications ---

    @app.get("/api/segments/{segment_id}/report")
    def segment_report(segment_id: int):
        try:
            return pipeline.segment_report(get_store(), config, segment_id)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post("/api/segments/{segment_id}/notify")
    def notify(segment_id: int, request: Request):
        # Manual notifications are operator actions: no token means 403, the
        # endpoint exists but is not for the public.
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise HTTPException(status_code=403, detail="operator credentials required")
        account = app.state.store.resolve_token(header[7:].strip())
        if account is None:
            raise HTTPException(status_code=403, detail="operator credentials required")
        try:
            event = pipeline.notify_segment(
                get_store(), config, segment_id, actor=account.username
            )
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        if event is None:
            return {"suppressed": True}
        return {
            "suppressed": False,
            "event": {
                "id": event.id,
                "segment_id": event.segment_id,
                "transition": event.transition,
                "delivery_status": event.delivery_status.value,
                "attempts": event.attempts,
                "created_at": format_utc(event.created_at),
            },
        }

    @app.post("/api/tick")
    def tick(account: Account = Depends(require_account)):
        summary = run_deadline_tick(get_store(), config)
        pipeline.flush_outbox(get_store(), config)
        return summary

    return app


def _parse_bbox(raw: str | None) -> tuple[float, float, float, float] | None:
    if raw is None:
        return None
    parts = raw.split(",")
    if len(parts) != 4:
        raise MalformedBBox(f"expected min_lat,min_lon,max_lat,max_lon: {raw!r}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise MalformedBBox(str(exc)) from exc


def _parse_instant(raw: str | None) -> datetime | None:
    if raw is None:
        return None
    try:
        parsed = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ValueError(f"bad instant {raw!r}: {exc}") from exc
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed


def _geojson_response(request: Request, doc: dict) -> Response:
    body = canonical_geojson_bytes(doc)
    etag = '"' + hashlib.sha256(body).hexdigest()[:32] + '"'
    if request.headers.get("if-none-match") == etag:
        return Response(status_code=304, headers={"ETag": etag})
    return Response(
        content=body,
        media_type="application/geo+json",
        headers={"ETag": etag, "Cache-Control": "no-cache"},
    )


def _segment_json(segment: segreg.RoadSegment, include_private: bool) -> dict:
    contract = {
        "contractor_name": segment.contract.contractor_name,
        "construction_date": segment.contract.construction_date.isoformat(),
        "budget": segment.contract.budget,
        "warranty_end": segment.contract.warranty_end.isoformat(),
        "category": segment.contract.category,
    }
    if include_private:
        contract["contractor_contact"] = segment.contract.contractor_contact
    doc = {
        "id": segment.id,
        "geometry": [[lat, lon] for lat, lon in segment.geometry],
        "health": segment.health.value_name,
        "length_m": segment.length_m,
        "contract": contract,
    }
    if include_private:
        doc["created_by"] = segment.created_by
    return doc

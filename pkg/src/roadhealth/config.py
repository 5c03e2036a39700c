"""Runtime configuration.

Every tunable documented by the deployment contract lives here with its
default; environment variables (``ROADHEALTH_*``) override defaults and CLI
flags override the environment.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone

# Video overlay clock vs GPS UTC: measured constant for the reference dashcam.
DEFAULT_CLOCK_OFFSET_S = 5 * 3600 + 30 * 60 + 44  # 5h30m44s


def parse_offset(text: str) -> int:
    """Parse a signed ``HH:MM:SS`` offset into seconds."""
    raw = text.strip()
    sign = -1 if raw.startswith("-") else 1
    raw = raw.lstrip("+-")
    parts = raw.split(":")
    if len(parts) != 3:
        raise ValueError(f"offset must be HH:MM:SS, got {text!r}")
    h, m, s = (int(p) for p in parts)
    if m >= 60 or s >= 60 or h < 0 or m < 0 or s < 0:
        raise ValueError(f"offset must be HH:MM:SS, got {text!r}")
    return sign * (h * 3600 + m * 60 + s)


@dataclass
class Config:
    store_path: str = "roadhealth.db"
    clock_offset_s: int = DEFAULT_CLOCK_OFFSET_S
    local_zone: str = "IST"

    # GPS interpolation
    max_gap_s: float = 5.0
    edge_tolerance_s: float = 1.0

    # detection
    confidence_floor: float = 0.25
    severity_moderate_ratio: float = 0.005
    severity_severe_ratio: float = 0.02
    thumbnail_max_b64: int = 64 * 1024

    # dedup / attribution
    cluster_threshold_m: float = 2.5
    attribution_radius_m: float = 15.0

    # governance
    density_warn_per_km: float = 5.0
    density_severe_per_km: float = 20.0
    coverage_radius_m: float = 10.0
    alert_cooldown_s: int = 24 * 3600
    dispatch_retries: int = 3
    dispatch_backoff_s: float = 1.0
    authority_contacts: list[str] = field(default_factory=list)
    escalation_contacts: list[str] = field(default_factory=list)

    # external services
    routing_base_url: str = "http://localhost:5000"
    webhook_url: str = ""
    webhook_token: str = ""
    http_timeout_s: float = 10.0

    # service
    port: int = 8000
    token_ttl_s: int = 12 * 3600
    ingest_rate_limit_per_hour: int = 10
    max_upload_bytes: int = 50 * 1024 * 1024

    # Frozen clock for reproducible replays/tests; ISO instant or None.
    fixed_now: str = ""

    def now(self) -> datetime:
        if self.fixed_now:
            return datetime.fromisoformat(self.fixed_now.replace("Z", "+00:00"))
        return datetime.now(timezone.utc)

    @classmethod
    def from_env(cls, env: dict | None = None, **overrides) -> "Config":
        """Build a config from defaults, then environment, then overrides."""
        env = os.environ if env is None else env
        kwargs = {}
        for f in fields(cls):
            key = f"ROADHEALTH_{f.name.upper()}"
            if key not in env:
                continue
            raw = env[key]
            ftype = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "str")
            if f.name == "clock_offset_s" and ":" in raw:
                kwargs[f.name] = parse_offset(raw)
            elif ftype == "int":
                kwargs[f.name] = int(raw)
            elif ftype == "float":
                kwargs[f.name] = float(raw)
            elif ftype.startswith("list"):
                kwargs[f.name] = [p.strip() for p in raw.split(",") if p.strip()]
            else:
                kwargs[f.name] = raw
        kwargs["fixed_now"] = env.get("ROADHEALTH_NOW", kwargs.get("fixed_now", ""))
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        positive = [
            "max_gap_s", "edge_tolerance_s", "cluster_threshold_m",
            "attribution_radius_m", "density_warn_per_km", "density_severe_per_km",
            "coverage_radius_m", "severity_moderate_ratio", "severity_severe_ratio",
        ]
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.severity_severe_ratio <= self.severity_moderate_ratio:
            raise ValueError("severity_severe_ratio must exceed severity_moderate_ratio")
        if self.density_severe_per_km <= self.density_warn_per_km:
            raise ValueError("density_severe_per_km must exceed density_warn_per_km")

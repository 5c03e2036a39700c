"""Command-line entry points: ingest, serve, report, accounts, deadline tick.

Configuration comes from ROADHEALTH_* environment variables with flags taking
precedence. Exit codes: 0 success, 1 expected error (bad input, missing
file, unknown id), 2 unexpected internal error. Errors are printed to stderr
as a single JSON line so scripts can parse them.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import auth
from .config import Config, parse_offset
from .errors import RoadHealthError
from .governance import run_deadline_tick
from .pipeline import flush_outbox, network_summary, run_ingest, segment_report
from .store import Store, canonical_geojson_bytes


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def _open_store(config: Config) -> Store:
    return Store(config.store_path, now_fn=config.now)


@click.group()
@click.option("--store", "store_path", default=None, metavar="PATH",
              help="sqlite database file (default: ROADHEALTH_STORE_PATH or ./roadhealth.db)")
@click.option("--offset", default=None, metavar="[-]HH:MM:SS",
              help="dashcam local clock minus UTC")
@click.option("--routing-url", default=None, metavar="URL", help="routing provider base URL")
@click.option("--webhook-url", default=None, metavar="URL", help="alert webhook sink")
@click.pass_context
def cli(ctx, store_path, offset, routing_url, webhook_url):
    """Road health backend: pothole ingest, governance, and map service."""
    overrides = {
        "store_path": store_path,
        "routing_base_url": routing_url,
        "webhook_url": webhook_url,
    }
    if offset is not None:
        overrides["clock_offset_s"] = parse_offset(offset)
    ctx.obj = Config.from_env(**overrides)


@cli.command()
@click.option("--detections", required=True, metavar="FILE", help="detections JSONL")
@click.option("--gps", required=True, metavar="FILE", help="GPS log CSV")
@click.option("--actor", default="cli", help="name recorded in the audit trail")
@click.pass_obj
def ingest(config: Config, detections: str, gps: str, actor: str):
    """Process one dashcam batch into the registry."""
    detections_data = Path(detections).read_bytes()
    gps_data = Path(gps).read_bytes()
    store = _open_store(config)
    try:
        result = run_ingest(store, config, detections_data, gps_data, actor=actor)
    finally:
        store.close()
    click.echo(json.dumps(result.statistics, indent=2, sort_keys=True))


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=None, type=int, help="default: ROADHEALTH_PORT or 8000")
@click.pass_obj
def serve(config: Config, host: str, port: int | None):
    """Run the HTTP API."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(config), host=host, port=port or config.port, log_level="warning")


@cli.command()
@click.option("--segment", "segment_id", default=None, type=int, metavar="ID",
              help="report on one segment instead of the whole network")
@click.option("--geojson", "geojson_path", default=None, metavar="FILE",
              help="write the full GeoJSON export here ('-' for stdout)")
@click.pass_obj
def report(config: Config, segment_id: int | None, geojson_path: str | None):
    """Print a health report, or export the map as GeoJSON."""
    store = _open_store(config)
    try:
        if geojson_path is not None:
            body = canonical_geojson_bytes(store.export_geojson())
            if geojson_path == "-":
                sys.stdout.buffer.write(body)
            else:
                Path(geojson_path).write_bytes(body)
            return
        if segment_id is not None:
            click.echo(json.dumps(segment_report(store, config, segment_id), indent=2, sort_keys=True))
        else:
            click.echo(json.dumps(network_summary(store), indent=2, sort_keys=True))
    finally:
        store.close()


@cli.group()
def account():
    """Manage operator accounts."""


@account.command("create")
@click.option("--username", required=True)
@click.option("--role", default="authority", show_default=True,
              type=click.Choice(["authority", "admin"]))
@click.pass_obj
def account_create(config: Config, username: str, role: str):
    """Create an operator account; the password is always prompted."""
    password = click.prompt("Password", hide_input=True, confirmation_prompt=True)
    store = _open_store(config)
    try:
        created = store.create_account(
            username, auth.hash_password(password), role, actor="cli"
        )
    finally:
        store.close()
    click.echo(json.dumps({"account_id": created.id, "username": created.username, "role": role}))


@cli.command()
@click.pass_obj
def tick(config: Config):
    """Re-evaluate every segment against the warranty calendar."""
    store = _open_store(config)
    try:
        summary = run_deadline_tick(store, config)
        delivery = flush_outbox(store, config)
    finally:
        store.close()
    click.echo(json.dumps({**summary, "delivery": delivery}, indent=2, sort_keys=True))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        _emit_error("Aborted", "aborted")
        return 1
    except click.ClickException as exc:
        _emit_error(type(exc).__name__, exc.format_message())
        return 1
    except RoadHealthError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 1
    except (OSError, ValueError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 1
    except Exception as exc:  # anything else is a bug, not a usage problem
        _emit_error(type(exc).__name__, str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: exit codes, JSON error lines, prompts."""

import json

import pytest
from click.testing import CliRunner

from roadhealth.auth import verify_password
from roadhealth.cli import cli, main
from roadhealth.store import Store, canonical_geojson_bytes

from .conftest import FROZEN_NOW, box, detections_jsonl, frame, straight_track, utc
from .oracles import assert_valid_geojson


@pytest.fixture
def env(tmp_path, monkeypatch):
    """Point the CLI at a scratch store with a frozen clock."""
    db = tmp_path / "cli.db"
    monkeypatch.setenv("ROADHEALTH_STORE_PATH", str(db))
    monkeypatch.setenv("ROADHEALTH_NOW", FROZEN_NOW)
    monkeypatch.delenv("ROADHEALTH_WEBHOOK_URL", raising=False)

    detections = tmp_path / "detections.jsonl"
    detections.write_text(
        detections_jsonl([frame(i, f"13-08-2025 12:00:5{i}", [box()]) for i in range(3)])
    )
    gps = tmp_path / "track.csv"
    gps.write_text(straight_track(utc(2025, 8, 13, 6, 30, 0), 60, 20.0, 85.0, dlat_per_s=1e-5))
    return {"db": db, "detections": detections, "gps": gps, "dir": tmp_path}


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestIngestCommand:
    def test_fixture_ingest_succeeds(self, env, capsys):
        code, out, err = run(
            ["ingest", "--detections", str(env["detections"]), "--gps", str(env["gps"])],
            capsys,
        )
        assert code == 0
        assert err == ""
        stats = json.loads(out)
        assert stats["frames"] == 3
        assert stats["potholes_created"] == 1
        assert stats["batch_id"] == 1

    def test_missing_file_exits_1_and_names_path(self, env, capsys):
        missing = str(env["dir"] / "nope.jsonl")
        code, out, err = run(
            ["ingest", "--detections", missing, "--gps", str(env["gps"])], capsys
        )
        assert code == 1
        error = json.loads(err)
        assert "nope.jsonl" in error["message"]
        assert error["error"] == "FileNotFoundError"

    def test_unparseable_gps_exits_1(self, env, capsys):
        bad = env["dir"] / "bad.csv"
        bad.write_text("utc_iso,lat\nnot-enough-columns\n")
        code, _, err = run(
            ["ingest", "--detections", str(env["detections"]), "--gps", str(bad)], capsys
        )
        assert code == 1
        assert json.loads(err)["error"] == "MalformedRow"

    def test_custom_offset_flag(self, env, capsys):
        # Frames read 12:00:5x; with a 5h30m offset (44 s less than default)
        # they land 44 s later on the same track.
        code, out, _ = run(
            [
                "--offset", "05:30:00",
                "ingest", "--detections", str(env["detections"]), "--gps", str(env["gps"]),
            ],
            capsys,
        )
        assert code == 0
        assert json.loads(out)["observations"] == 3

    def test_bad_offset_exits_1(self, env, capsys):
        code, _, err = run(
            ["--offset", "99", "ingest", "--detections", "x", "--gps", "y"], capsys
        )
        assert code == 1
        assert json.loads(err)["error"] == "ValueError"


class TestReportCommand:
    def test_network_summary(self, env, capsys):
        run(["ingest", "--detections", str(env["detections"]), "--gps", str(env["gps"])], capsys)
        code, out, _ = run(["report"], capsys)
        assert code == 0
        summary = json.loads(out)
        assert summary["potholes"] == {"total": 1, "active": 1, "repaired": 0}

    def test_unknown_segment_exits_1(self, env, capsys):
        code, _, err = run(["report", "--segment", "99"], capsys)
        assert code == 1
        assert json.loads(err)["error"] == "NotFound"

    def test_geojson_file_matches_store_export(self, env, capsys):
        run(["ingest", "--detections", str(env["detections"]), "--gps", str(env["gps"])], capsys)
        out_path = env["dir"] / "map.geojson"
        code, _, _ = run(["report", "--geojson", str(out_path)], capsys)
        assert code == 0
        body = out_path.read_bytes()
        assert_valid_geojson(json.loads(body))
        store = Store(str(env["db"]))
        assert body == canonical_geojson_bytes(store.export_geojson())
        store.close()

    def test_geojson_to_stdout(self, env, capsysbinary):
        code = main(["report", "--geojson", "-"])
        assert code == 0
        doc = json.loads(capsysbinary.readouterr().out)
        assert doc == {"type": "FeatureCollection", "features": []}


class TestAccountCommand:
    def test_create_prompts_for_password(self, env):
        runner = CliRunner()
        result = runner.invoke(
            cli,
            ["account", "create", "--username", "asha", "--role", "authority"],
            input="hunter2hunter2\nhunter2hunter2\n",
        )
        assert result.exit_code == 0
        assert "Password" in result.output
        assert "Repeat for confirmation" in result.output
        created = json.loads(result.output.splitlines()[-1])
        assert created["username"] == "asha"
        assert created["role"] == "authority"

        store = Store(str(env["db"]))
        account = store.get_account("asha")
        assert verify_password("hunter2hunter2", account.password_digest)
        assert not verify_password("wrong", account.password_digest)
        store.close()

    def test_password_never_accepted_as_argument(self, env, capsys):
        code, _, err = run(
            ["account", "create", "--username", "x", "--password", "leak"], capsys
        )
        assert code == 1
        assert "--password" in json.loads(err)["message"]

    def test_duplicate_username_exits_1(self, env, capsys):
        runner = CliRunner()
        runner.invoke(
            cli, ["account", "create", "--username", "asha"], input="pw123456\npw123456\n"
        )
        result = runner.invoke(
            cli, ["account", "create", "--username", "asha"], input="pw123456\npw123456\n"
        )
        assert result.exit_code != 0


class TestTickCommand:
    def test_tick_reports_summary(self, env, capsys):
        code, out, _ = run(["tick"], capsys)
        assert code == 0
        summary = json.loads(out)
        assert summary["segments_evaluated"] == 0
        assert summary["delivery"] == {"dispatched": 0, "sent": 0, "failed": 0}


class TestUsageErrors:
    def test_unknown_command_exits_1(self, env, capsys):
        code, _, err = run(["frobnicate"], capsys)
        assert code == 1
        assert "frobnicate" in json.loads(err)["message"]

    def test_missing_required_option_exits_1(self, env, capsys):
        code, _, err = run(["ingest", "--gps", "x"], capsys)
        assert code == 1
        assert "--detections" in json.loads(err)["message"]

"""Session lifecycle, HTTP API, streaming, and acquisition sources."""

from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from emg_affect.dataio import read_recording
from emg_affect.errors import FrameError, SourceLost, SourceUnavailable
from emg_affect.service import (
    FakeClock,
    Phase,
    RealClock,
    ServiceConfig,
    SimulatorSource,
    create_app,
    parse_serial_frame,
)
from emg_affect.signals import Label


@pytest.fixture()
def clock():
    return FakeClock()


@pytest.fixture()
def client(tmp_path, clock):
    config = ServiceConfig(
        data_dir=tmp_path,
        clock=clock,
        pre_rest_s=2.0,
        post_rest_s=1.0,
        open_typing_limit_s=5.0,
        stream_interval_ms=100,
    )
    app = create_app(config)
    with TestClient(app) as c:
        yield c


def create_session(client, condition="fixed", script="hi", label="angry", **extra):
    body = {"user_id": "u01", "condition": condition, "label": label}
    if condition == "fixed":
        body["script"] = script
    body.update(extra)
    response = client.post("/sessions", json=body)
    assert response.status_code == 201, response.text
    return response.json()["id"]


class TestClocks:
    def test_fake_clock_advances(self):
        c = FakeClock(start_ms=100)
        assert c.now_ms() == 100
        c.advance(250)
        assert c.now_ms() == 350

    def test_real_clock_is_monotone(self):
        c = RealClock()
        a = c.now_ms()
        b = c.now_ms()
        assert b >= a >= 0


class TestParseSerialFrame:
    def test_plain_value(self):
        assert parse_serial_frame(b"512\n") == 512

    def test_crlf_and_zero(self):
        assert parse_serial_frame(b"0\r\n") == 0

    def test_leading_zeros(self):
        assert parse_serial_frame(b"0042\n") == 42

    @pytest.mark.parametrize("raw", [b"", b"\n", b"abc\n", b"-5\n", b"1000\n", b"3.5\n"])
    def test_bad_frames(self, raw):
        with pytest.raises(FrameError):
            parse_serial_frame(raw)


class TestSimulatorSource:
    def test_sample_count_follows_clock(self):
        src = SimulatorSource(Label.RELAXED, seed=1, total_s=30.0)
        first = src.read(1000)
        assert len(first) == 201  # samples at t = 0..1000 ms inclusive
        second = src.read(2000)
        assert len(second) == 200

    def test_values_in_adc_range(self):
        src = SimulatorSource(Label.ANGRY, seed=2, total_s=30.0)
        chunk = src.read(5000)
        assert all(0 <= v <= 999 for _, v in chunk)

    def test_deterministic(self):
        a = SimulatorSource(Label.ANGRY, seed=3, total_s=30.0).read(2000)
        b = SimulatorSource(Label.ANGRY, seed=3, total_s=30.0).read(2000)
        assert a == b

    def test_exhausted_buffer_raises(self):
        src = SimulatorSource(Label.RELAXED, seed=4, total_s=1.0)
        with pytest.raises(SourceLost):
            src.read(60_000)


class TestSessionLifecycle:
    def test_fixed_script_full_flow(self, client, clock, tmp_path):
        sid = create_session(client, script="hi")
        snap = client.get(f"/sessions/{sid}").json()
        assert snap["phase"] == "created"

        assert client.post(f"/sessions/{sid}/start").status_code == 200
        assert client.get(f"/sessions/{sid}").json()["phase"] == "pre-rest"

        # Keystrokes are rejected until typing starts.
        r = client.post(f"/sessions/{sid}/keys", json={"key": "h"})
        assert r.status_code == 409
        assert r.json()["error"] == "InvalidPhase"

        clock.advance(2000)
        assert client.get(f"/sessions/{sid}").json()["phase"] == "typing"

        for key in ["h", "x", "Backspace", "i"]:
            r = client.post(f"/sessions/{sid}/keys", json={"key": key})
            assert r.status_code == 200
        snap = client.get(f"/sessions/{sid}").json()
        assert snap["typed"] == "hi"
        assert snap["key_count"] == 4
        # The script is complete, so the session moved to post-rest.
        assert snap["phase"] == "post-rest"

        clock.advance(1000)
        snap = client.get(f"/sessions/{sid}").json()
        assert snap["phase"] == "finished"
        assert snap["recording_path"]

        recording = read_recording(tmp_path / snap["recording_path"])
        assert recording.user_id == "u01"
        assert recording.label is Label.ANGRY
        # 2 s pre-rest + instantaneous typing + 1 s post-rest at 200 Hz.
        assert len(recording.series.samples) == pytest.approx(601, abs=2)

        sidecar = json.loads(
            (tmp_path / snap["recording_path"].replace(".txt", ".json")).read_text()
        )
        assert sidecar["typed"] == "hi"
        assert sidecar["script"] == "hi"
        assert [p["phase"] for p in sidecar["phases"]] == [
            "pre-rest",
            "typing",
            "post-rest",
            "finished",
        ]
        assert len(sidecar["keys"]) == 4

    def test_open_session_times_out(self, client, clock):
        sid = create_session(client, condition="open")
        client.post(f"/sessions/{sid}/start")
        clock.advance(2000)
        assert client.get(f"/sessions/{sid}").json()["phase"] == "typing"
        clock.advance(5000)  # typing limit
        assert client.get(f"/sessions/{sid}").json()["phase"] == "post-rest"
        clock.advance(1000)
        assert client.get(f"/sessions/{sid}").json()["phase"] == "finished"

    def test_open_session_manual_finish(self, client, clock):
        sid = create_session(client, condition="open")
        client.post(f"/sessions/{sid}/start")
        clock.advance(2500)
        assert client.post(f"/sessions/{sid}/finish").status_code == 200
        assert client.get(f"/sessions/{sid}").json()["phase"] == "post-rest"

    def test_finish_outside_typing_conflicts(self, client, clock):
        sid = create_session(client)
        client.post(f"/sessions/{sid}/start")
        r = client.post(f"/sessions/{sid}/finish")
        assert r.status_code == 409

    def test_abort_from_any_live_phase(self, client, clock):
        sid = create_session(client)
        assert client.post(f"/sessions/{sid}/abort").status_code == 200
        assert client.get(f"/sessions/{sid}").json()["phase"] == "aborted"

    def test_double_abort_conflicts(self, client, clock):
        sid = create_session(client)
        client.post(f"/sessions/{sid}/abort")
        assert client.post(f"/sessions/{sid}/abort").status_code == 409

    def test_start_twice_conflicts(self, client, clock):
        sid = create_session(client)
        client.post(f"/sessions/{sid}/start")
        assert client.post(f"/sessions/{sid}/start").status_code == 409

    def test_remaining_time_counts_down(self, client, clock):
        sid = create_session(client, condition="open")
        client.post(f"/sessions/{sid}/start")
        clock.advance(2000)
        first = client.get(f"/sessions/{sid}").json()["remaining_s"]
        clock.advance(1000)
        second = client.get(f"/sessions/{sid}").json()["remaining_s"]
        assert first == pytest.approx(5.0)
        assert second == pytest.approx(4.0)

    def test_fixed_without_script_rejected(self, client):
        r = client.post(
            "/sessions",
            json={"user_id": "u01", "condition": "fixed", "label": "angry"},
        )
        assert r.status_code == 400
        assert r.json()["error"] == "InvalidSessionConfig"

    def test_rejected_create_does_not_consume_an_id(self, client):
        r = client.post(
            "/sessions",
            json={"user_id": "u01", "condition": "fixed", "label": "angry"},
        )
        assert r.status_code == 400
        sid = create_session(client)
        assert sid == "s0001"

    def test_keystroke_after_finish_conflicts(self, client, clock):
        sid = create_session(client, script="a")
        client.post(f"/sessions/{sid}/start")
        clock.advance(2000)
        client.post(f"/sessions/{sid}/keys", json={"key": "a"})
        clock.advance(1000)
        assert client.get(f"/sessions/{sid}").json()["phase"] == "finished"
        r = client.post(f"/sessions/{sid}/keys", json={"key": "b"})
        assert r.status_code == 409


class TestHttpSurface:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"

    def test_unknown_session_404(self, client):
        r = client.get("/sessions/zzz")
        assert r.status_code == 404
        assert r.json()["error"] == "UnknownSession"

    def test_cross_origin_requests_allowed(self, client):
        r = client.get("/health", headers={"origin": "http://localhost:8080"})
        assert r.headers["access-control-allow-origin"] == "*"
        preflight = client.options(
            "/sessions",
            headers={
                "origin": "http://localhost:8080",
                "access-control-request-method": "POST",
            },
        )
        assert preflight.status_code == 200
        assert "POST" in preflight.headers["access-control-allow-methods"]

    def test_sessions_list(self, client):
        a = create_session(client)
        b = create_session(client, condition="open", label="relaxed")
        listed = client.get("/sessions").json()
        ids = [s["id"] for s in listed]
        assert ids == [a, b]

    def test_ids_are_sequential(self, client):
        a = create_session(client)
        b = create_session(client)
        assert (a, b) == ("s0001", "s0002")

    def test_source_unavailable_maps_to_503(self, tmp_path, clock):
        def broken_factory(config):
            raise SourceUnavailable("no hardware attached")

        config = ServiceConfig(
            data_dir=tmp_path, clock=clock, source_factory=broken_factory
        )
        app = create_app(config)
        with TestClient(app) as client:
            r = client.post(
                "/sessions",
                json={"user_id": "u01", "condition": "open", "label": "angry"},
            )
            assert r.status_code == 503
            assert r.json()["error"] == "SourceUnavailable"

    def test_validation_error_is_422(self, client):
        r = client.post("/sessions", json={"user_id": "u01"})
        assert r.status_code == 422


class TestStream:
    def test_frames_track_phases(self, client, clock):
        sid = create_session(client, condition="open")
        client.post(f"/sessions/{sid}/start")

        frames = []
        with client.stream(
            "GET", f"/sessions/{sid}/stream", params={"frames": 5}
        ) as response:
            assert response.status_code == 200
            assert response.headers["content-type"].startswith("text/event-stream")
            for line in response.iter_lines():
                if line.startswith("data: "):
                    frames.append(json.loads(line[len("data: ") :]))
        assert len(frames) == 5
        assert frames[0]["phase"] == "pre-rest"
        assert [f["t_ms"] for f in frames] == [0, 100, 200, 300, 400]
        for frame in frames:
            assert "remaining_s" in frame
            assert isinstance(frame["values"], list)

    def test_stream_stops_at_terminal_phase(self, client, clock):
        sid = create_session(client)
        client.post(f"/sessions/{sid}/abort")
        frames = []
        with client.stream(
            "GET", f"/sessions/{sid}/stream", params={"frames": 10}
        ) as response:
            for line in response.iter_lines():
                if line.startswith("data: "):
                    frames.append(json.loads(line[len("data: ") :]))
        assert len(frames) == 1
        assert frames[0]["phase"] == "aborted"

    def test_stream_unknown_session_404(self, client):
        assert client.get("/sessions/nope/stream").status_code == 404


class TestSourceLoss:
    def test_session_aborts_when_source_dies(self, tmp_path, clock):
        def tiny_factory(config):
            return SimulatorSource(config.label, seed=config.seed, total_s=0.5)

        config = ServiceConfig(
            data_dir=tmp_path,
            clock=clock,
            source_factory=tiny_factory,
            pre_rest_s=2.0,
            post_rest_s=1.0,
        )
        app = create_app(config)
        with TestClient(app) as client:
            sid = create_session(client, condition="open")
            client.post(f"/sessions/{sid}/start")
            clock.advance(30_000)
            snap = client.get(f"/sessions/{sid}").json()
            assert snap["phase"] == "aborted"
            assert snap["error"]

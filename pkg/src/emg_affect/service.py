"""HTTP capture service: typing sessions with live-streamed EMG samples.

A session walks Created -> PreRest -> Typing -> PostRest -> Finished (any
state can abort). Time is injected through a small Clock so tests drive
the machine with a fake; transitions are evaluated lazily on access — no
background tasks. Samples come from a SampleSource; the simulator source
pre-generates its whole deterministic buffer up front, and the serial
source adapts a live sensor line by line.

On finish the session writes a standard recording file plus a JSON sidecar
with the phase/keystroke timeline, ready for ``dataio.load_corpus``.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
from dataclasses import dataclass, field, replace
from enum import Enum, unique
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from .dataio import Recording, write_recording
from .errors import (
    EmgAffectError,
    FrameError,
    InvalidPhase,
    InvalidSessionConfig,
    SourceLost,
    SourceUnavailable,
)
from .signals import (
    ADC_MAX,
    ADC_MIN,
    DEFAULT_PROFILES,
    DEFAULT_SAMPLE_RATE_HZ,
    RELAXED_PROFILE,
    Condition,
    Label,
    SampleSeries,
    generate_synthetic,
)

DEFAULT_PRE_REST_S = 10.0
DEFAULT_POST_REST_S = 5.0
DEFAULT_OPEN_TYPING_LIMIT_S = 60.0
DEFAULT_FIXED_CAP_S = 300.0
DEFAULT_STREAM_INTERVAL_MS = 100
SIMULATOR_REST_SPIKE_FACTOR = 0.25
_BUFFER_SLACK_S = 10.0


# --- clocks ---------------------------------------------------------------

class RealClock:
    """Monotonic wall time in ms since the clock was created."""

    def __init__(self):
        self._t0 = time.monotonic_ns()

    def now_ms(self) -> int:
        return (time.monotonic_ns() - self._t0) // 1_000_000

    async def wait(self, ms: int) -> None:
        await asyncio.sleep(ms / 1000.0)


class FakeClock:
    """Manually advanced clock; ``wait`` advances instead of sleeping."""

    def __init__(self, start_ms: int = 0):
        self._now = int(start_ms)

    def now_ms(self) -> int:
        return self._now

    def advance(self, ms: int) -> None:
        if ms < 0:
            raise ValueError("cannot advance backwards")
        self._now += int(ms)

    async def wait(self, ms: int) -> None:
        self.advance(ms)


# --- sample sources -------------------------------------------------------

def parse_serial_frame(line: bytes) -> int:
    """One sensor line: ASCII decimal in [0, 999], optional trailing CR."""
    if not isinstance(line, (bytes, bytearray)):
        raise FrameError(f"expected bytes, got {type(line).__name__}")
    text = bytes(line).rstrip(b"\r\n")
    if not text or not text.isdigit():
        raise FrameError(f"unparseable frame {line!r}")
    value = int(text)
    if not ADC_MIN <= value <= ADC_MAX:
        raise FrameError(f"value {value} outside [{ADC_MIN}, {ADC_MAX}]")
    return value


class SimulatorSource:
    """Deterministic stand-in for the sensor.

    The entire buffer — a quiet pre-rest stretch followed by the session
    label's profile — is generated at construction, so identical seeds
    yield identical sessions regardless of read cadence.
    """

    def __init__(
        self,
        label: Label,
        seed: int,
        sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ,
        pre_rest_s: float = DEFAULT_PRE_REST_S,
        total_s: float = DEFAULT_FIXED_CAP_S + DEFAULT_PRE_REST_S + DEFAULT_POST_REST_S,
    ):
        self.sample_rate_hz = sample_rate_hz
        rest = replace(
            RELAXED_PROFILE,
            spike_rate_hz=RELAXED_PROFILE.spike_rate_hz * SIMULATOR_REST_SPIKE_FACTOR,
            seed=seed,
        )
        main = replace(DEFAULT_PROFILES[label], seed=seed + 1)
        main_s = total_s - pre_rest_s + _BUFFER_SLACK_S
        pre = generate_synthetic(rest, pre_rest_s, sample_rate_hz)
        body = generate_synthetic(main, main_s, sample_rate_hz)
        self._buffer = np.concatenate([pre.samples, body.samples])
        self._cursor = 0

    def read(self, until_ms: int) -> list[tuple[int, int]]:
        """Samples due by ``until_ms`` (session-relative) not yet returned."""
        rate = self.sample_rate_hz
        due = until_ms * rate // 1000 + 1
        if due > self._buffer.size:
            raise SourceLost("simulator buffer exhausted")
        out = [
            (round(i * 1000 / rate), int(self._buffer[i]))
            for i in range(self._cursor, due)
        ]
        self._cursor = max(self._cursor, due)
        return out

    def stop(self) -> None:
        pass


class SerialSource:
    """Live sensor over a serial line; timestamps at the nominal rate."""

    def __init__(
        self,
        port: str,
        baud: int = 115200,
        sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ,
    ):
        try:
            import serial  # optional extra; deliberately a lazy import
        except ImportError as exc:
            raise SourceUnavailable(
                "serial capture needs the pyserial package (pip install emg-affect[serial])"
            ) from exc
        try:
            self._port = serial.Serial(port, baud, timeout=0)
        except Exception as exc:  # pyserial raises its own SerialException
            raise SourceUnavailable(f"cannot open {port}: {exc}") from exc
        self.sample_rate_hz = sample_rate_hz
        self._carry = b""
        self._count = 0

    def read(self, until_ms: int) -> list[tuple[int, int]]:
        try:
            data = self._carry + self._port.read(65536)
        except Exception as exc:
            raise SourceLost(f"serial read failed: {exc}") from exc
        lines = data.split(b"\n")
        self._carry = lines.pop()
        out = []
        for line in lines:
            if not line.strip(b"\r"):
                continue
            value = parse_serial_frame(line)
            out.append((round(self._count * 1000 / self.sample_rate_hz), value))
            self._count += 1
        return out

    def stop(self) -> None:
        try:
            self._port.close()
        except Exception:
            pass


# --- session state machine ------------------------------------------------

@unique
class Phase(str, Enum):
    CREATED = "created"
    PRE_REST = "pre-rest"
    TYPING = "typing"
    POST_REST = "post-rest"
    FINISHED = "finished"
    ABORTED = "aborted"


TERMINAL_PHASES = (Phase.FINISHED, Phase.ABORTED)


@dataclass(frozen=True)
class SessionConfig:
    user_id: str
    condition: Condition
    label: Label
    script: str | None = None
    seed: int = 0
    pre_rest_s: float = DEFAULT_PRE_REST_S
    post_rest_s: float = DEFAULT_POST_REST_S
    open_typing_limit_s: float = DEFAULT_OPEN_TYPING_LIMIT_S
    fixed_cap_s: float = DEFAULT_FIXED_CAP_S

    def __post_init__(self):
        if self.condition is Condition.FIXED and not self.script:
            raise InvalidSessionConfig("a fixed-script session needs a script")
        for name in ("pre_rest_s", "post_rest_s", "open_typing_limit_s", "fixed_cap_s"):
            if getattr(self, name) < 0:
                raise InvalidSessionConfig(f"{name} must be >= 0")

    @property
    def typing_limit_s(self) -> float:
        if self.condition is Condition.FIXED:
            return self.fixed_cap_s
        return self.open_typing_limit_s


@dataclass
class Session:
    """One capture session; all mutation goes through ``advance`` and the
    explicit events (start / keystroke / finish / abort)."""

    id: str
    config: SessionConfig
    source: SimulatorSource | SerialSource
    clock: RealClock | FakeClock
    data_dir: Path
    phase: Phase = Phase.CREATED
    started_at_ms: int | None = None
    typing_started_ms: int | None = None
    post_rest_started_ms: int | None = None
    ended_ms: int | None = None
    typed: str = ""
    keys: list[dict] = field(default_factory=list)
    phase_log: list[dict] = field(default_factory=list)
    samples: list[tuple[int, int]] = field(default_factory=list)
    recording_path: str | None = None
    error: str | None = None

    def _log_phase(self, phase: Phase, t_ms: int) -> None:
        self.phase = phase
        self.phase_log.append({"phase": phase.value, "t_ms": t_ms})

    def _session_ms(self, now_ms: int) -> int:
        if self.started_at_ms is None:
            return 0
        return now_ms - self.started_at_ms

    def start(self) -> None:
        if self.phase is not Phase.CREATED:
            raise InvalidPhase(f"cannot start a session in phase {self.phase.value}")
        now = self.clock.now_ms()
        self.started_at_ms = now
        self._log_phase(Phase.PRE_REST, 0)

    def advance(self) -> None:
        """Catch the machine up to the clock; called on every API access."""
        if self.phase in (Phase.CREATED, *TERMINAL_PHASES):
            return
        t = self._session_ms(self.clock.now_ms())
        self._pull_samples(t)
        cfg = self.config
        while True:
            if self.phase is Phase.PRE_REST:
                boundary = round(cfg.pre_rest_s * 1000)
                if t >= boundary:
                    self.typing_started_ms = boundary
                    self._log_phase(Phase.TYPING, boundary)
                    continue
            elif self.phase is Phase.TYPING:
                deadline = self.typing_started_ms + round(cfg.typing_limit_s * 1000)
                if t >= deadline:
                    self._enter_post_rest(deadline)
                    continue
            elif self.phase is Phase.POST_REST:
                boundary = self.post_rest_started_ms + round(cfg.post_rest_s * 1000)
                if t >= boundary:
                    self._finish(boundary)
            break

    def _pull_samples(self, session_ms: int) -> None:
        try:
            self.samples.extend(self.source.read(session_ms))
        except SourceLost as exc:
            self.error = str(exc)
            self._log_phase(Phase.ABORTED, session_ms)
            self.source.stop()

    def _enter_post_rest(self, t_ms: int) -> None:
        self.post_rest_started_ms = t_ms
        self._log_phase(Phase.POST_REST, t_ms)

    def _finish(self, t_ms: int) -> None:
        self.ended_ms = t_ms
        self._log_phase(Phase.FINISHED, t_ms)
        self.source.stop()
        self._write_outputs(t_ms)

    def abort(self) -> None:
        self.advance()
        if self.phase in TERMINAL_PHASES:
            raise InvalidPhase(f"cannot abort a session in phase {self.phase.value}")
        t = self._session_ms(self.clock.now_ms()) if self.started_at_ms is not None else 0
        self._log_phase(Phase.ABORTED, t)
        self.source.stop()

    def keystroke(self, key: str) -> None:
        self.advance()
        if self.phase is not Phase.TYPING:
            raise InvalidPhase(f"keystrokes are only accepted while typing, not {self.phase.value}")
        t = self._session_ms(self.clock.now_ms())
        self.keys.append({"t_ms": t, "key": key})
        if key == "Backspace":
            self.typed = self.typed[:-1]
        elif len(key) == 1:
            self.typed += key
        # other control keys are logged but do not edit the buffer
        cfg = self.config
        if cfg.condition is Condition.FIXED and self.typed == cfg.script:
            self._enter_post_rest(t)

    def finish(self) -> None:
        self.advance()
        if self.phase is not Phase.TYPING:
            raise InvalidPhase(f"cannot finish a session in phase {self.phase.value}")
        self._enter_post_rest(self._session_ms(self.clock.now_ms()))

    def _write_outputs(self, end_ms: int) -> None:
        kept = [(t, v) for t, v in self.samples if t <= end_ms]
        series = SampleSeries(
            sample_rate_hz=self.source.sample_rate_hz,
            samples=np.array([v for _, v in kept], dtype=np.int64),
            start_offset_ms=kept[0][0] if kept else 0,
        )
        recording = Recording(
            series=series,
            user_id=self.config.user_id,
            condition=self.config.condition,
            label=self.config.label,
        )
        rec_path = self.data_dir / f"session-{self.id}.txt"
        write_recording(recording, rec_path, overwrite=True)
        sidecar = {
            "session_id": self.id,
            "user_id": self.config.user_id,
            "condition": self.config.condition.value,
            "label": self.config.label.value,
            "script": self.config.script,
            "typed": self.typed,
            "phases": self.phase_log,
            "keys": self.keys,
            "sample_count": len(kept),
            "sample_rate_hz": self.source.sample_rate_hz,
        }
        sidecar_path = self.data_dir / f"session-{self.id}.json"
        sidecar_path.write_text(
            json.dumps(sidecar, indent=2) + "\n", encoding="utf-8"
        )
        self.recording_path = str(rec_path)

    def remaining_s(self) -> float:
        if self.phase in (Phase.CREATED, *TERMINAL_PHASES):
            return 0.0
        t = self._session_ms(self.clock.now_ms())
        cfg = self.config
        if self.phase is Phase.PRE_REST:
            boundary = round(cfg.pre_rest_s * 1000)
        elif self.phase is Phase.TYPING:
            boundary = self.typing_started_ms + round(cfg.typing_limit_s * 1000)
        else:
            boundary = self.post_rest_started_ms + round(cfg.post_rest_s * 1000)
        return max(0.0, (boundary - t) / 1000.0)

    def snapshot(self) -> dict:
        self.advance()
        t = self._session_ms(self.clock.now_ms()) if self.started_at_ms is not None else 0
        return {
            "id": self.id,
            "phase": self.phase.value,
            "user_id": self.config.user_id,
            "condition": self.config.condition.value,
            "label": self.config.label.value,
            "script": self.config.script,
            "typed": self.typed,
            "elapsed_s": t / 1000.0 if self.started_at_ms is not None else 0.0,
            "remaining_s": self.remaining_s(),
            "key_count": len(self.keys),
            "sample_count": len(self.samples),
            "recording_path": self.recording_path,
            "error": self.error,
        }


# --- HTTP layer -----------------------------------------------------------

class CreateSessionRequest(BaseModel):
    user_id: str = Field(min_length=1)
    condition: Literal["fixed", "open"]
    label: Literal["relaxed", "angry"]
    script: str | None = None
    seed: int | None = None


class KeystrokeRequest(BaseModel):
    key: str = Field(min_length=1)


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Path
    clock: RealClock | FakeClock = field(default_factory=RealClock)
    source_factory: Callable[[SessionConfig], object] | None = None
    pre_rest_s: float = DEFAULT_PRE_REST_S
    post_rest_s: float = DEFAULT_POST_REST_S
    open_typing_limit_s: float = DEFAULT_OPEN_TYPING_LIMIT_S
    fixed_cap_s: float = DEFAULT_FIXED_CAP_S
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ
    stream_interval_ms: int = DEFAULT_STREAM_INTERVAL_MS


def _default_source_factory(config: ServiceConfig):
    def build(session_config: SessionConfig):
        return SimulatorSource(
            label=session_config.label,
            seed=session_config.seed,
            sample_rate_hz=config.sample_rate_hz,
            pre_rest_s=session_config.pre_rest_s,
            total_s=session_config.pre_rest_s
            + session_config.typing_limit_s
            + session_config.post_rest_s,
        )

    return build


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="emg-affect capture service")
    # Capture UIs are typically served from a different local port.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, Session] = {}
    lock = threading.Lock()
    counter = {"next": 1}
    source_factory = config.source_factory or _default_source_factory(config)
    Path(config.data_dir).mkdir(parents=True, exist_ok=True)

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise _NotFound(session_id)
        return session

    @app.exception_handler(EmgAffectError)
    async def domain_error(_request: Request, exc: EmgAffectError):
        if isinstance(exc, InvalidPhase):
            status = 409
        elif isinstance(exc, SourceUnavailable):
            status = 503
        else:
            status = 400
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(_NotFound)
    async def not_found(_request: Request, exc: "_NotFound"):
        return JSONResponse(
            status_code=404,
            content={"error": "UnknownSession", "detail": str(exc)},
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(sessions)}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        with lock:
            session_id = f"s{counter['next']:04d}"
            session_config = SessionConfig(
                user_id=body.user_id,
                condition=Condition(body.condition),
                label=Label(body.label),
                script=body.script,
                seed=body.seed if body.seed is not None else int(session_id[1:]),
                pre_rest_s=config.pre_rest_s,
                post_rest_s=config.post_rest_s,
                open_typing_limit_s=config.open_typing_limit_s,
                fixed_cap_s=config.fixed_cap_s,
            )
            session_source = source_factory(session_config)
            sessions[session_id] = Session(
                id=session_id,
                config=session_config,
                source=session_source,
                clock=config.clock,
                data_dir=Path(config.data_dir),
            )
            counter["next"] += 1
        return sessions[session_id].snapshot()

    @app.get("/sessions")
    def list_sessions():
        with lock:
            return [s.snapshot() for s in sessions.values()]

    @app.get("/sessions/{session_id}")
    def get_snapshot(session_id: str):
        with lock:
            return get_session(session_id).snapshot()

    @app.post("/sessions/{session_id}/start")
    def start_session(session_id: str):
        with lock:
            session = get_session(session_id)
            session.start()
            return session.snapshot()

    @app.post("/sessions/{session_id}/keys")
    def send_key(session_id: str, body: KeystrokeRequest):
        with lock:
            session = get_session(session_id)
            session.keystroke(body.key)
            return session.snapshot()

    @app.post("/sessions/{session_id}/finish")
    def finish_session(session_id: str):
        with lock:
            session = get_session(session_id)
            session.finish()
            return session.snapshot()

    @app.post("/sessions/{session_id}/abort")
    def abort_session(session_id: str):
        with lock:
            session = get_session(session_id)
            session.abort()
            return session.snapshot()

    @app.get("/sessions/{session_id}/stream")
    async def stream(session_id: str, frames: int | None = None, interval_ms: int | None = None):
        with lock:
            session = get_session(session_id)
        step = interval_ms if interval_ms is not None else config.stream_interval_ms

        async def frame_source():
            sent = 0
            cursor = len(session.samples)
            while frames is None or sent < frames:
                with lock:
                    snap = session.snapshot()
                    values = [v for _, v in session.samples[cursor:]]
                    cursor = len(session.samples)
                    payload = {
                        "t_ms": round(snap["elapsed_s"] * 1000),
                        "phase": snap["phase"],
                        "remaining_s": snap["remaining_s"],
                        "values": values,
                    }
                    terminal = session.phase in TERMINAL_PHASES
                yield f"data: {json.dumps(payload, separators=(',', ':'))}\n\n"
                sent += 1
                if terminal:
                    break
                await config.clock.wait(step)

        return StreamingResponse(frame_source(), media_type="text/event-stream")

    return app


class _NotFound(Exception):
    def __init__(self, session_id: str):
        super().__init__(f"no session with id {session_id!r}")

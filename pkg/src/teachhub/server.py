"""HTTP control endpoints and the WebSocket bridge.

Control surface (request/response JSON):

* ``GET  /api/health``                  -> {"status": "ok", "version": ...}
* ``GET  /api/games``                   -> available games
* ``POST /api/sessions``                -> create a session (see below)
* ``GET  /api/sessions``                -> registry listing
* ``GET  /api/sessions/{id}/log``       -> the session log as JSON lines
* ``POST /api/sessions/{id}/finalize``  -> outro + persist, returns the digest

``POST /api/sessions`` body: ``{"game_id", "pseudonym", "condition"?,
"session_id"?, "alpha"?, "learner_seed"?, "schedule_seed"?}`` plus
optional timeout overrides (``prompt_after_ms``, ``hint_invite_extra_ms``,
``hard_timeout_ms``, ``review_ms``).

The socket bridge at ``WS /ws/{session_id}?role=ui|robot|all`` replays the
current state snapshot on connect, then forwards hub envelopes for the chosen
topics; envelopes sent by the client are decoded as ``from_client`` events.
A background ticker delivers wall-clock ClockTicks to every live session so
timed prompts fire in real deployments (tests and simulations inject virtual
ticks instead).
"""

from __future__ import annotations

import asyncio
import time
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import __version__
from .hub import SessionHub
from .learner import LearnerConfig
from .protocol import ProtocolError, decode_event
from .session import Condition, SessionConfig, SessionStateError


def real_clock_ms() -> int:
    return time.time_ns() // 1_000_000


def create_app(
    hub: SessionHub,
    clock=real_clock_ms,
    tick_ms: int = 0,
    static_dir: Path | str | None = None,
) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_: FastAPI):
        ticker: asyncio.Task | None = None
        if tick_ms > 0:

            async def run() -> None:
                while True:
                    await asyncio.sleep(tick_ms / 1000)
                    hub.tick_all(clock())

            ticker = asyncio.create_task(run())
        try:
            yield
        finally:
            if ticker is not None:
                ticker.cancel()
            flush_partial_logs(hub)

    app = FastAPI(title="teachhub", version=__version__, lifespan=lifespan)
    app.state.hub = hub
    app.state.clock = clock

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/api/games")
    def games() -> dict:
        return {
            "games": [
                {"game_id": g.game_id, "title": g.title, "n_states": g.n_states, "n_actions": g.n_actions}
                for g in hub.games.values()
            ]
        }

    @app.post("/api/sessions", status_code=201)
    def create_session(body: dict):
        try:
            learner = LearnerConfig(
                alpha=float(body.get("alpha", 0.3)),
                rng_seed=int(body.get("learner_seed", 0)),
            )
            overrides = {
                key: int(body[key])
                for key in ("prompt_after_ms", "hint_invite_extra_ms", "hard_timeout_ms", "review_ms")
                if key in body
            }
            config = SessionConfig(
                game_id=str(body.get("game_id", "")),
                tutor_pseudonym=str(body.get("pseudonym", "")),
                learner=learner,
                condition=Condition(body.get("condition", Condition.LEARNING_BY_TEACHING.value)),
                schedule_seed=int(body.get("schedule_seed", 0)),
                **overrides,
            )
        except (ValueError, TypeError) as e:
            return JSONResponse({"error": str(e)}, status_code=400)
        now = clock()
        try:
            session_id, _ = hub.create_session(config, session_id=body.get("session_id"), now_ms=now)
        except KeyError as e:
            return JSONResponse({"error": str(e)}, status_code=404)
        except ValueError as e:
            return JSONResponse({"error": str(e)}, status_code=409)
        return {"session_id": session_id, "created_ms": now}

    @app.get("/api/sessions")
    def list_sessions() -> dict:
        return {"sessions": hub.list_sessions()}

    @app.get("/api/sessions/{session_id}/log")
    def get_log(session_id: str):
        try:
            log = hub.get_log(session_id)
        except KeyError as e:
            return JSONResponse({"error": str(e)}, status_code=404)
        return PlainTextResponse("\n".join(log.to_lines()) + "\n", media_type="application/x-ndjson")

    @app.post("/api/sessions/{session_id}/finalize")
    def finalize(session_id: str):
        try:
            log = hub.finalize(session_id, clock())
        except KeyError as e:
            return JSONResponse({"error": str(e)}, status_code=404)
        except SessionStateError as e:
            return JSONResponse({"error": str(e)}, status_code=409)
        return {"session_id": session_id, "digest": log.digest()}

    @app.websocket("/ws/{session_id}")
    async def bridge(websocket: WebSocket, session_id: str, role: str = "ui") -> None:
        await websocket.accept()
        try:
            hub.session(session_id)
        except KeyError:
            await websocket.send_json({"type": "error", "error": f"unknown session {session_id!r}"})
            await websocket.close(code=4404)
            return

        queue: asyncio.Queue = asyncio.Queue()
        loop = asyncio.get_running_loop()

        def forward(topic: str, envelope: dict) -> None:
            wanted = role == "all" or (role == "robot") == topic.endswith("/to_robot")
            if wanted:
                loop.call_soon_threadsafe(queue.put_nowait, envelope)

        unsubscribe = hub.subscribe_session(session_id, forward)
        await websocket.send_json(hub.snapshot_envelope(session_id, clock()))

        async def pump_out() -> None:
            while True:
                await websocket.send_json(await queue.get())

        sender = asyncio.create_task(pump_out())
        try:
            while True:
                raw = await websocket.receive_json()
                try:
                    event, timestamp_ms, seq = decode_event(raw)
                except ProtocolError as e:
                    await websocket.send_json({"type": "error", "error": str(e)})
                    continue
                try:
                    hub.handle_event(session_id, event, timestamp_ms, seq=seq)
                except KeyError:
                    break
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            unsubscribe()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def flush_partial_logs(hub: SessionHub) -> None:
    """Persist valid JSONL for every unfinalized session (graceful shutdown)."""
    if hub.log_dir is None:
        return
    hub.log_dir.mkdir(parents=True, exist_ok=True)
    for sid in hub.session_ids():
        session = hub.session(sid)
        if not session.finalized:
            session.make_log().write(hub.log_dir / f"{sid}.partial.jsonl")

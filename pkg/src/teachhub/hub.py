"""Session registry and event router.

The hub owns every live session: it creates them, feeds them client events in
sequence order, executes robot-directed effects against the per-session
backend, publishes everything else to the in-process bus (which transports
bridge to), and persists the session log at finalization.

Concurrency contract: sessions share no mutable state; each session's
operations run under its own lock (single logical writer), the registry has
its own lock for create/lookup, so any number of sessions can run in parallel.
Time never comes from the host clock here: callers stamp every operation.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import session as sm
from .games import GameSpec, builtin_games
from .protocol import effect_topic, encode_effect, topic_to_robot, topic_to_ui
from .records import SessionLog
from .robot import Eye, Gesture, Say, Sleep, TranscriptBackend, backend_for_game

Subscriber = Callable[[str, dict], None]


@dataclass
class _Slot:
    session: sm.TeachingSession
    backend: TranscriptBackend | None
    lock: threading.Lock = field(default_factory=threading.Lock)
    out_seq: int = 0
    last_event_seq: int = -1
    final_log: SessionLog | None = None


class SessionHub:
    """Hosts many concurrent sessions behind one registry."""

    def __init__(
        self,
        games: dict[str, GameSpec] | None = None,
        log_dir: Path | str | None = None,
        record_transcripts: bool = True,
    ):
        self.games = dict(games) if games is not None else builtin_games()
        self.log_dir = Path(log_dir) if log_dir is not None else None
        self.record_transcripts = record_transcripts
        self._slots: dict[str, _Slot] = {}
        self._registry_lock = threading.Lock()
        self._subscribers: dict[str, list[Subscriber]] = {}
        self._sub_lock = threading.Lock()

    # -- pub/sub ------------------------------------------------------------

    def subscribe(self, topic: str, callback: Subscriber) -> Callable[[], None]:
        """Register a callback for one topic; returns the unsubscribe function."""
        with self._sub_lock:
            self._subscribers.setdefault(topic, []).append(callback)

        def unsubscribe() -> None:
            with self._sub_lock:
                subs = self._subscribers.get(topic, [])
                if callback in subs:
                    subs.remove(callback)

        return unsubscribe

    def subscribe_session(self, session_id: str, callback: Subscriber) -> Callable[[], None]:
        """Subscribe to both hub-to-client topics of one session."""
        offs = [
            self.subscribe(topic_to_ui(session_id), callback),
            self.subscribe(topic_to_robot(session_id), callback),
        ]
        return lambda: [off() for off in offs]

    def _publish(self, topic: str, envelope: dict) -> None:
        with self._sub_lock:
            subs = list(self._subscribers.get(topic, ()))
        for cb in subs:
            cb(topic, envelope)

    def _has_subscribers(self, session_id: str) -> bool:
        with self._sub_lock:
            return bool(
                self._subscribers.get(topic_to_ui(session_id))
                or self._subscribers.get(topic_to_robot(session_id))
            )

    # -- registry -----------------------------------------------------------

    def create_session(
        self, config: sm.SessionConfig, session_id: str | None = None, now_ms: int = 0
    ) -> tuple[str, list[sm.Effect]]:
        game = self.games.get(config.game_id)
        if game is None:
            raise KeyError(f"unknown game {config.game_id!r}")
        sid = session_id if session_id is not None else uuid.uuid4().hex[:12]
        with self._registry_lock:
            if sid in self._slots:
                raise ValueError(f"session id {sid!r} already exists")
            session = sm.TeachingSession(sid, config, game, created_ms=now_ms)
            backend = backend_for_game(game) if self.record_transcripts else None
            slot = _Slot(session=session, backend=backend)
            self._slots[sid] = slot
        with slot.lock:
            effects = session.start(now_ms)
            self._dispatch(slot, effects, now_ms)
        return sid, effects

    def _slot(self, session_id: str) -> _Slot:
        with self._registry_lock:
            slot = self._slots.get(session_id)
        if slot is None:
            raise KeyError(f"unknown session {session_id!r}")
        return slot

    def session(self, session_id: str) -> sm.TeachingSession:
        return self._slot(session_id).session

    def session_ids(self) -> list[str]:
        with self._registry_lock:
            return sorted(self._slots)

    def list_sessions(self) -> list[dict]:
        rows = []
        for sid in self.session_ids():
            s = self._slot(sid).session
            rows.append(
                {
                    "session_id": sid,
                    "game_id": s.game.game_id,
                    "pseudonym": s.config.tutor_pseudonym,
                    "condition": s.config.condition.value,
                    "phase": s.phase.value,
                    "iterations_done": s.iteration,
                    "iterations_total": s.iterations_total(),
                    "finalized": s.finalized,
                }
            )
        return rows

    # -- event flow ----------------------------------------------------------

    def handle_event(
        self, session_id: str, event: sm.SessionEvent, now_ms: int, seq: int | None = None
    ) -> list[sm.Effect]:
        slot = self._slot(session_id)
        with slot.lock:
            session = slot.session
            if seq is not None:
                if seq <= slot.last_event_seq:
                    session.note_protocol_error(
                        f"event seq {seq} not after {slot.last_event_seq}", now_ms
                    )
                    return []
                slot.last_event_seq = seq
            effects = session.handle_event(event, now_ms)
            effects += self._auto_advance(session, now_ms)
            self._dispatch(slot, effects, now_ms)
            return effects

    def tick(self, session_id: str, now_ms: int) -> list[sm.Effect]:
        return self.handle_event(session_id, sm.ClockTick(), now_ms)

    def tick_all(self, now_ms: int) -> None:
        for sid in self.session_ids():
            slot = self._slot(sid)
            if not slot.session.finalized:
                self.tick(sid, now_ms)

    def _auto_advance(self, session: sm.TeachingSession, now_ms: int) -> list[sm.Effect]:
        if session.phase is sm.Phase.POSING:
            return session.advance(now_ms)
        return []

    def finalize(self, session_id: str, now_ms: int) -> SessionLog:
        slot = self._slot(session_id)
        with slot.lock:
            effects, log = slot.session.finalize(now_ms)
            self._dispatch(slot, effects, now_ms)
            slot.final_log = log
            self._persist(slot, log)
        return log

    def get_log(self, session_id: str) -> SessionLog:
        slot = self._slot(session_id)
        with slot.lock:
            return slot.final_log if slot.final_log is not None else slot.session.make_log()

    def snapshot_envelope(self, session_id: str, now_ms: int) -> dict:
        slot = self._slot(session_id)
        with slot.lock:
            slot.out_seq += 1
            return {
                "type": "snapshot",
                "session_id": session_id,
                "seq": slot.out_seq,
                "timestamp_ms": now_ms,
                "payload": slot.session.view(),
            }

    # -- internals ------------------------------------------------------------

    def _dispatch(self, slot: _Slot, effects: list[sm.Effect], now_ms: int) -> None:
        session_id = slot.session.session_id
        publish = self._has_subscribers(session_id)
        for effect in effects:
            if slot.backend is not None:
                cmd = _robot_command(effect)
                if cmd is not None:
                    slot.backend.execute(cmd, now_ms)
            if publish:
                slot.out_seq += 1
                envelope = encode_effect(effect, session_id, slot.out_seq, now_ms)
                self._publish(effect_topic(envelope, session_id), envelope)

    def _persist(self, slot: _Slot, log: SessionLog) -> None:
        if self.log_dir is None:
            return
        self.log_dir.mkdir(parents=True, exist_ok=True)
        log.write(self.log_dir / f"{log.session_id}.jsonl")
        if slot.backend is not None:
            slot.backend.save(self.log_dir / f"{log.session_id}.robot.txt")


def _robot_command(effect: sm.Effect):
    if isinstance(effect, sm.RobotSay):
        return Say(effect.text)
    if isinstance(effect, sm.EyeColor):
        return Eye(effect.color)
    if isinstance(effect, sm.GestureCue):
        return Gesture(effect.cue)
    if isinstance(effect, sm.RobotSleep):
        return Sleep()
    return None

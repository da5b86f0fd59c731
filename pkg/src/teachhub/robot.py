"""Robot command execution against a pluggable backend.

The hub translates robot-directed effects into :class:`RobotCommand` values
and hands them to a backend. The bundled backend is headless: it appends one
timestamped line per command to a transcript, which stands in for the physical
robot (speech, LED eyes, gestures) and doubles as a replayable record. A
hardware backend only needs to implement ``execute``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Union

from .games import GameSpec

SCRIPT_PHASES = ("intro", "ack_correct", "ack_incorrect", "reminder", "hint_invite", "outro")


@dataclass(frozen=True)
class Say:
    text: str


@dataclass(frozen=True)
class Eye:
    color: str  # green | red | neutral


@dataclass(frozen=True)
class Gesture:
    cue_id: str


@dataclass(frozen=True)
class Sleep:
    pass


RobotCommand = Union[Say, Eye, Gesture, Sleep]


class RobotBackend(Protocol):
    def execute(self, cmd: RobotCommand, now_ms: int = 0) -> None: ...


class UnknownGestureError(ValueError):
    pass


class TranscriptBackend:
    """Headless backend: validates gesture cues and records a transcript."""

    def __init__(self, allowed_cues: frozenset[str] = frozenset()):
        self.allowed_cues = allowed_cues
        self.lines: list[str] = []

    def execute(self, cmd: RobotCommand, now_ms: int = 0) -> None:
        if isinstance(cmd, Say):
            entry = f"SAY {cmd.text}"
        elif isinstance(cmd, Eye):
            if cmd.color not in ("green", "red", "neutral"):
                raise ValueError(f"unknown eye color {cmd.color!r}")
            entry = f"EYE {cmd.color}"
        elif isinstance(cmd, Gesture):
            if cmd.cue_id not in self.allowed_cues:
                raise UnknownGestureError(f"unknown gesture cue {cmd.cue_id!r}")
            entry = f"GESTURE {cmd.cue_id}"
        elif isinstance(cmd, Sleep):
            entry = "SLEEP"
        else:
            raise TypeError(f"not a robot command: {cmd!r}")
        self.lines.append(f"{now_ms}\t{entry}")

    def save(self, path: Path | str) -> None:
        Path(path).write_text("\n".join(self.lines) + "\n", encoding="utf-8")


def backend_for_game(game: GameSpec) -> TranscriptBackend:
    return TranscriptBackend(allowed_cues=game.gesture_cues())


def script_phrases(game: GameSpec, phase: str, tutor: str = "") -> str:
    """Phrase template for an interaction phase, slots filled from context.

    Templates live in the content pack, not in code; ``{title}`` and
    ``{tutor}`` are the supported slots.
    """
    if phase not in SCRIPT_PHASES:
        raise KeyError(f"unknown script phase {phase!r}")
    template = game.phrases.get(phase)
    if not template:
        raise KeyError(f"content pack for {game.game_id!r} has no {phase!r} phrase template")
    return template.replace("{title}", game.title).replace("{tutor}", tutor)

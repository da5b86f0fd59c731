"""Tests for robot command execution and phrase templating."""

from __future__ import annotations

import pytest

from teachhub.games import builtin_body_parts, builtin_grammar
from teachhub.robot import (
    Eye,
    Gesture,
    Say,
    Sleep,
    TranscriptBackend,
    UnknownGestureError,
    backend_for_game,
    script_phrases,
)


def test_eye_command_transcript_format():
    backend = TranscriptBackend()
    backend.execute(Eye("green"), now_ms=1234)
    assert backend.lines == ["1234\tEYE green"]


def test_known_gesture_accepted_unknown_rejected():
    backend = backend_for_game(builtin_body_parts())
    backend.execute(Gesture("point_head"), now_ms=1)
    assert backend.lines[-1].endswith("GESTURE point_head")
    with pytest.raises(UnknownGestureError):
        backend.execute(Gesture("moonwalk"), now_ms=2)


def test_bad_eye_color_rejected():
    with pytest.raises(ValueError):
        TranscriptBackend().execute(Eye("purple"))


def test_transcript_preserves_submission_order_and_replays():
    def run() -> list[str]:
        backend = backend_for_game(builtin_body_parts())
        backend.execute(Say("hello"), 10)
        backend.execute(Eye("red"), 20)
        backend.execute(Gesture("point_eye"), 30)
        backend.execute(Sleep(), 40)
        return backend.lines

    first, second = run(), run()
    assert first == second
    assert [line.split("\t")[1].split()[0] for line in first] == ["SAY", "EYE", "GESTURE", "SLEEP"]


def test_transcript_save(tmp_path):
    backend = TranscriptBackend()
    backend.execute(Say("bonjour"), 5)
    path = tmp_path / "robot.txt"
    backend.save(path)
    assert path.read_text() == "5\tSAY bonjour\n"


def test_script_phrases_fill_slots():
    game = builtin_body_parts()
    intro = script_phrases(game, "intro", tutor="14B")
    assert game.title in intro
    assert "14B" in intro


def test_reminder_phrase_exists_for_both_games():
    for game in (builtin_body_parts(), builtin_grammar()):
        for phase in ("intro", "ack_correct", "ack_incorrect", "reminder", "hint_invite", "outro"):
            assert script_phrases(game, phase, tutor="x")


def test_missing_template_raises():
    game = builtin_body_parts()
    stripped = type(game)(
        game_id=game.game_id,
        title=game.title,
        n_actions=game.n_actions,
        iteration_count=game.iteration_count,
        questions=game.questions,
        test_rounds=game.test_rounds,
        phrases={},
    )
    with pytest.raises(KeyError):
        script_phrases(stripped, "outro")
    with pytest.raises(KeyError):
        script_phrases(game, "victory_dance")

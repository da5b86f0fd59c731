"""Wire protocol: topics and message envelopes.

Every message is a JSON object ``{type, session_id, seq, timestamp_ms,
payload}``. Hub-to-client messages travel on the ``to_ui`` and ``to_robot``
topics, client-to-hub events on ``from_client``. The protocol is transport
agnostic: the bundled server exposes it over a WebSocket bridge, but any
pub/sub broker that moves these envelopes verbatim works. Decoding ignores
unknown payload fields and rejects unknown message types.
"""

from __future__ import annotations

from dataclasses import asdict
from typing import Any

from . import session as sm
from .learner import FeedbackSource

PROTOCOL_PREFIX = "lbt/v1"


def topic_to_ui(session_id: str) -> str:
    return f"{PROTOCOL_PREFIX}/{session_id}/to_ui"


def topic_to_robot(session_id: str) -> str:
    return f"{PROTOCOL_PREFIX}/{session_id}/to_robot"


def topic_from_client(session_id: str) -> str:
    return f"{PROTOCOL_PREFIX}/{session_id}/from_client"


class ProtocolError(ValueError):
    pass


_EFFECT_TYPES: dict[type, str] = {
    sm.ShowQuestion: "show_question",
    sm.RobotAnswer: "robot_answer",
    sm.ShowFeedbackButtons: "show_feedback_buttons",
    sm.RobotSay: "robot_say",
    sm.EyeColor: "eye_color",
    sm.GestureCue: "gesture",
    sm.ShowReview: "show_review",
    sm.PromptReminder: "prompt_reminder",
    sm.InviteHint: "invite_hint",
    sm.RobotSleep: "robot_sleep",
    sm.ShowTest: "show_test",
    sm.ShowQuestionnaire: "show_questionnaire",
    sm.SessionEnd: "session_end",
}

ROBOT_EFFECT_TYPES = {"robot_say", "eye_color", "gesture", "robot_sleep"}


def effect_payload(effect: sm.Effect) -> dict[str, Any]:
    """Client-facing payload for an effect (test answer keys never leave the hub)."""
    if isinstance(effect, sm.ShowTest):
        return {
            "kind": effect.kind,
            "n_items": effect.test.n_items,
            "rounds": [
                {
                    "round_id": r.round_id,
                    "title": r.title,
                    "items": [{"prompt": i.prompt, "options": list(i.options)} for i in r.items],
                }
                for r in effect.test.rounds
            ],
        }
    if isinstance(effect, sm.ShowQuestionnaire):
        return {"items": [asdict(item) for item in effect.items]}
    return asdict(effect)


def encode_effect(effect: sm.Effect, session_id: str, seq: int, timestamp_ms: int) -> dict:
    type_name = _EFFECT_TYPES.get(type(effect))
    if type_name is None:
        raise ProtocolError(f"not a wire effect: {effect!r}")
    return {
        "type": type_name,
        "session_id": session_id,
        "seq": seq,
        "timestamp_ms": timestamp_ms,
        "payload": effect_payload(effect),
    }


def effect_topic(envelope: dict, session_id: str) -> str:
    return (
        topic_to_robot(session_id)
        if envelope["type"] in ROBOT_EFFECT_TYPES
        else topic_to_ui(session_id)
    )


_EVENT_TYPES = (
    "feedback_given",
    "hint_opened",
    "hint_closed",
    "test_responses",
    "questionnaire_responses",
    "clock_tick",
)


def encode_event(event: sm.SessionEvent, session_id: str, seq: int, timestamp_ms: int) -> dict:
    if isinstance(event, sm.FeedbackGiven):
        type_name, payload = "feedback_given", {"h": event.h, "action": event.action}
    elif isinstance(event, sm.HintOpened):
        type_name, payload = "hint_opened", {}
    elif isinstance(event, sm.HintClosed):
        type_name, payload = "hint_closed", {}
    elif isinstance(event, sm.TestResponses):
        type_name, payload = "test_responses", {"kind": event.kind, "responses": list(event.responses)}
    elif isinstance(event, sm.QuestionnaireResponses):
        type_name, payload = "questionnaire_responses", {"responses": dict(event.responses)}
    elif isinstance(event, sm.ClockTick):
        type_name, payload = "clock_tick", {}
    else:
        raise ProtocolError(f"not a wire event: {event!r}")
    return {
        "type": type_name,
        "session_id": session_id,
        "seq": seq,
        "timestamp_ms": timestamp_ms,
        "payload": payload,
    }


def decode_event(envelope: dict) -> tuple[sm.SessionEvent, int, int | None]:
    """Parse a ``from_client`` envelope into (event, timestamp_ms, seq).

    Unknown payload fields are ignored; unknown envelope types are rejected.
    """
    if not isinstance(envelope, dict):
        raise ProtocolError("envelope must be an object")
    type_name = envelope.get("type")
    if type_name not in _EVENT_TYPES:
        raise ProtocolError(f"unknown event type {type_name!r}")
    timestamp = envelope.get("timestamp_ms")
    if not isinstance(timestamp, int):
        raise ProtocolError("envelope timestamp_ms must be an integer (milliseconds)")
    seq = envelope.get("seq")
    if seq is not None and not isinstance(seq, int):
        raise ProtocolError("envelope seq must be an integer when present")
    payload = envelope.get("payload") or {}
    if not isinstance(payload, dict):
        raise ProtocolError("envelope payload must be an object")

    event: sm.SessionEvent
    try:
        if type_name == "feedback_given":
            event = sm.FeedbackGiven(
                h=int(payload.get("h", 0)),
                action=None if payload.get("action") is None else int(payload["action"]),
                source=FeedbackSource.HUMAN,
            )
        elif type_name == "hint_opened":
            event = sm.HintOpened()
        elif type_name == "hint_closed":
            event = sm.HintClosed()
        elif type_name == "test_responses":
            event = sm.TestResponses(
                kind=str(payload["kind"]), responses=tuple(int(r) for r in payload["responses"])
            )
        elif type_name == "questionnaire_responses":
            event = sm.QuestionnaireResponses(
                responses={str(k): int(v) for k, v in dict(payload["responses"]).items()}
            )
        else:
            event = sm.ClockTick()
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolError(f"malformed {type_name} payload: {e}") from e
    return event, timestamp, seq

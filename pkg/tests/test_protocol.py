"""Tests for wire envelopes, topic routing, hub pub/sub and the HTTP/WS server."""

from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from teachhub.hub import SessionHub
from teachhub.learner import LearnerConfig
from teachhub.protocol import (
    ProtocolError,
    decode_event,
    encode_effect,
    encode_event,
    topic_from_client,
    topic_to_robot,
    topic_to_ui,
)
from teachhub.records import parse_log_lines
from teachhub.server import create_app, flush_partial_logs
from teachhub.session import (
    FeedbackGiven,
    HintClosed,
    HintOpened,
    QuestionnaireResponses,
    RobotSay,
    SessionConfig,
    ShowTest,
    TestResponses,
)


def config(**kw) -> SessionConfig:
    kw.setdefault("game_id", "body_parts")
    kw.setdefault("tutor_pseudonym", "7C")
    kw.setdefault("learner", LearnerConfig(rng_seed=1))
    return SessionConfig(**kw)


# -- envelopes ------------------------------------------------------------------


def test_topics():
    assert topic_to_ui("abc") == "lbt/v1/abc/to_ui"
    assert topic_to_robot("abc") == "lbt/v1/abc/to_robot"
    assert topic_from_client("abc") == "lbt/v1/abc/from_client"


def test_event_encode_decode_round_trip():
    for event in (
        FeedbackGiven(h=1),
        FeedbackGiven(h=-1, action=2),
        HintOpened(),
        HintClosed(),
        TestResponses(kind="pre", responses=(0, 1, 2)),
        QuestionnaireResponses({"enjoy_fun": 5}),
    ):
        envelope = encode_event(event, "s1", seq=3, timestamp_ms=777)
        decoded, ts, seq = decode_event(json.loads(json.dumps(envelope)))
        assert ts == 777 and seq == 3
        assert type(decoded) is type(event)
    fb, _, _ = decode_event(encode_event(FeedbackGiven(h=-1, action=2), "s1", 1, 1))
    assert fb.h == -1 and fb.action == 2


def test_decode_rejects_unknown_type_and_bad_envelope():
    with pytest.raises(ProtocolError):
        decode_event({"type": "dance", "session_id": "s", "timestamp_ms": 1, "payload": {}})
    with pytest.raises(ProtocolError):
        decode_event({"type": "feedback_given", "session_id": "s", "payload": {"h": 1}})
    with pytest.raises(ProtocolError):
        decode_event("nonsense")


def test_decode_ignores_unknown_payload_fields():
    envelope = encode_event(FeedbackGiven(h=1), "s1", 1, 5)
    envelope["payload"]["color"] = "orange"
    envelope["extra_header"] = 42
    event, _, _ = decode_event(envelope)
    assert event.h == 1


def test_effect_envelope_shape_and_test_payload_hides_answers():
    hub = SessionHub()
    sid, effects = hub.create_session(config(), session_id="s1", now_ms=9)
    show_test = [e for e in effects if isinstance(e, ShowTest)][0]
    envelope = encode_effect(show_test, sid, seq=2, timestamp_ms=9)
    assert set(envelope) == {"type", "session_id", "seq", "timestamp_ms", "payload"}
    assert envelope["type"] == "show_test"
    blob = json.dumps(envelope)
    assert '"correct"' not in blob
    assert envelope["payload"]["n_items"] == 15


# -- hub pub/sub -------------------------------------------------------------------


def test_hub_publishes_to_ui_and_robot_topics_in_seq_order():
    hub = SessionHub()
    seen: list[tuple[str, dict]] = []
    sid = "s1"
    hub.subscribe(topic_to_ui(sid), lambda t, env: seen.append((t, env)))
    hub.subscribe(topic_to_robot(sid), lambda t, env: seen.append((t, env)))
    hub.create_session(config(), session_id=sid, now_ms=0)
    assert [env["type"] for _, env in seen] == ["robot_say", "show_test"]
    assert seen[0][0].endswith("/to_robot")
    assert seen[1][0].endswith("/to_ui")
    seqs = [env["seq"] for _, env in seen]
    assert seqs == sorted(seqs)


def test_hub_snapshot_envelope_matches_view():
    hub = SessionHub()
    sid, _ = hub.create_session(config(), session_id="s1")
    snapshot = hub.snapshot_envelope(sid, 123)
    assert snapshot["type"] == "snapshot"
    assert snapshot["payload"]["phase"] == "test"
    assert snapshot["payload"]["test"]["kind"] == "pre"


def test_hub_rejects_stale_event_seq():
    hub = SessionHub()
    sid, _ = hub.create_session(config(), session_id="s1")
    test = hub.session(sid)._active_test
    responses = tuple(it.correct for it in test.all_items())
    hub.handle_event(sid, TestResponses(kind="pre", responses=responses), 100, seq=5)
    hub.handle_event(sid, FeedbackGiven(h=1), 200, seq=5)  # stale
    log = hub.get_log(sid)
    assert any("seq" in e["detail"] for e in log.protocol_errors)
    assert len(log.iterations) == 0


def test_hub_unknown_session():
    hub = SessionHub()
    with pytest.raises(KeyError):
        hub.handle_event("ghost", FeedbackGiven(h=1), 0)
    with pytest.raises(KeyError):
        hub.get_log("ghost")


def test_hub_persists_log_and_transcript(tmp_path):
    hub = SessionHub(log_dir=tmp_path)
    sid, _ = hub.create_session(config(), session_id="s1")
    from test_session import run_full_session  # reuse the driver

    now = run_full_session(hub, sid)
    hub.finalize(sid, now + 1)
    log_path = tmp_path / "s1.jsonl"
    transcript = tmp_path / "s1.robot.txt"
    assert log_path.exists() and transcript.exists()
    (parsed,) = parse_log_lines(log_path.read_text().splitlines(), source="s1.jsonl")
    assert parsed.footer is not None
    assert "SLEEP" in transcript.read_text()


# -- HTTP API -----------------------------------------------------------------------


def make_client(tmp_path=None) -> tuple[TestClient, SessionHub]:
    hub = SessionHub(log_dir=tmp_path)
    app = create_app(hub, clock=lambda: 1_000_000)
    return TestClient(app), hub


def test_health_endpoint():
    client, _ = make_client()
    body = client.get("/api/health").json()
    assert body["status"] == "ok"
    assert body["version"]


def test_create_and_list_sessions_over_http():
    client, _ = make_client()
    for i in range(3):
        resp = client.post(
            "/api/sessions",
            json={"game_id": "body_parts", "pseudonym": f"p{i}", "session_id": f"s{i}"},
        )
        assert resp.status_code == 201, resp.text
    listing = client.get("/api/sessions").json()["sessions"]
    assert [s["session_id"] for s in listing] == ["s0", "s1", "s2"]
    assert all(s["phase"] == "test" for s in listing)


def test_create_session_error_codes():
    client, _ = make_client()
    assert client.post("/api/sessions", json={"game_id": "nope", "pseudonym": "x"}).status_code == 404
    assert client.post("/api/sessions", json={"game_id": "body_parts", "pseudonym": ""}).status_code == 400
    ok = {"game_id": "body_parts", "pseudonym": "x", "session_id": "dup"}
    assert client.post("/api/sessions", json=ok).status_code == 201
    assert client.post("/api/sessions", json=ok).status_code == 409


def test_fetch_log_over_http():
    client, hub = make_client()
    client.post("/api/sessions", json={"game_id": "grammar", "pseudonym": "q", "session_id": "g1"})
    resp = client.get("/api/sessions/g1/log")
    assert resp.status_code == 200
    (log,) = parse_log_lines(resp.text.splitlines(), source="wire")
    assert log.game_id == "grammar"
    assert client.get("/api/sessions/none/log").status_code == 404


def test_finalize_over_http_rejects_premature():
    client, _ = make_client()
    client.post("/api/sessions", json={"game_id": "body_parts", "pseudonym": "x", "session_id": "s"})
    assert client.post("/api/sessions/s/finalize").status_code == 409


def test_websocket_bridge_snapshot_event_flow():
    client, hub = make_client()
    client.post("/api/sessions", json={"game_id": "body_parts", "pseudonym": "ws", "session_id": "w1"})
    with client.websocket_connect("/ws/w1") as ws:
        snapshot = ws.receive_json()
        assert snapshot["type"] == "snapshot"
        test_payload = snapshot["payload"]["test"]
        n_items = sum(len(r["items"]) for r in test_payload["rounds"])
        # answer the pre-test over the wire (all first options)
        ws.send_json(
            encode_event(
                TestResponses(kind="pre", responses=tuple([0] * n_items)), "w1", seq=1, timestamp_ms=5
            )
        )
        types = [ws.receive_json()["type"] for _ in range(3)]
        assert types == ["show_question", "robot_answer", "show_feedback_buttons"]
        ws.send_json(encode_event(FeedbackGiven(h=1), "w1", seq=2, timestamp_ms=4000))
        types = []
        while True:
            msg = ws.receive_json()
            types.append(msg["type"])
            if msg["type"] == "show_feedback_buttons":
                break
        assert "eye_color" not in types  # robot effects go to the robot topic
        assert "show_question" in types
    log = hub.get_log("w1")
    assert len(log.iterations) == 1
    # question was posed when the pre-test came in (t=5), feedback at t=4000
    assert log.iterations[0].time_ms == 3995
    assert log.iterations[0].h_given == 1


def test_websocket_unknown_session_rejected():
    client, _ = make_client()
    with client.websocket_connect("/ws/ghost") as ws:
        msg = ws.receive_json()
        assert msg["type"] == "error"


def test_flush_partial_logs(tmp_path):
    client, hub = make_client(tmp_path)
    client.post("/api/sessions", json={"game_id": "body_parts", "pseudonym": "x", "session_id": "p1"})
    flush_partial_logs(hub)
    partial = tmp_path / "p1.partial.jsonl"
    assert partial.exists()
    (log,) = parse_log_lines(partial.read_text().splitlines(), source="p1")
    assert log.footer is None  # valid but unfinished

"""Session telemetry: per-iteration records, whole-session logs, JSONL persistence.

A session log is a sequence of JSON records, one per line, discriminated by a
``rec`` field: one ``header``, one ``iteration`` per game turn, one ``test``
per knowledge test taken, an optional ``questionnaire``, any ``protocol_error``
lines, and one ``footer`` carrying the final value-table snapshot. Logs from
simulated and human sessions share this schema byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .games import TestResult


class LogFormatError(ValueError):
    """A persisted log line could not be parsed; carries file and line number."""

    def __init__(self, source: str, lineno: int, detail: str):
        self.source = source
        self.lineno = lineno
        super().__init__(f"{source}:{lineno}: {detail}")


@dataclass(frozen=True)
class IterationRecord:
    """Telemetry for one game turn.

    ``robot_action`` is the acting agent's pick (the tutee's answer, or the
    tutor's own answer in the self-practice condition). ``h_given`` is None
    for an abandoned (non-response) turn, in which case ``feedback_correct``
    is None as well and ``non_response`` is set.
    """

    session_id: str
    index: int
    state_id: str
    robot_action: int | None
    robot_correct: bool | None
    h_given: int | None
    feedback_correct: bool | None
    time_ms: int
    hint_ms: int
    non_response: bool = False

    def __post_init__(self) -> None:
        if self.time_ms < 0 or self.hint_ms < 0:
            raise ValueError("time_ms and hint_ms must be non-negative")
        if self.h_given is not None:
            expected = (self.h_given == 1) == self.robot_correct
            if self.feedback_correct != expected:
                raise ValueError("feedback_correct inconsistent with h_given/robot_correct")


@dataclass
class SessionLog:
    """Everything one session produced, in record order."""

    header: dict
    iterations: list[IterationRecord] = field(default_factory=list)
    tests: dict[str, TestResult] = field(default_factory=dict)
    questionnaire: dict | None = None
    protocol_errors: list[dict] = field(default_factory=list)
    footer: dict | None = None

    @property
    def session_id(self) -> str:
        return self.header["session_id"]

    @property
    def condition(self) -> str:
        return self.header["condition"]

    @property
    def game_id(self) -> str:
        return self.header["game_id"]

    def to_lines(self) -> list[str]:
        def dump(obj: dict) -> str:
            return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))

        lines = [dump({"rec": "header", **self.header})]
        for it in self.iterations:
            lines.append(dump({"rec": "iteration", **asdict(it)}))
        for kind in ("pre", "post", "retention"):
            if kind in self.tests:
                t = self.tests[kind]
                lines.append(
                    dump(
                        {
                            "rec": "test",
                            "session_id": self.session_id,
                            "kind": t.kind,
                            "per_round_scores": list(t.per_round_scores),
                            "total": t.total,
                            "at_ms": t.at_ms,
                        }
                    )
                )
        if self.questionnaire is not None:
            lines.append(dump({"rec": "questionnaire", "session_id": self.session_id, **self.questionnaire}))
        for err in self.protocol_errors:
            lines.append(dump({"rec": "protocol_error", "session_id": self.session_id, **err}))
        if self.footer is not None:
            lines.append(dump({"rec": "footer", "session_id": self.session_id, **self.footer}))
        return lines

    def digest(self) -> str:
        sha = hashlib.sha256()
        for line in self.to_lines():
            sha.update(line.encode("utf-8"))
            sha.update(b"\n")
        return sha.hexdigest()

    def write(self, path: Path | str) -> None:
        Path(path).write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")


def _record_into(log: SessionLog, rec: dict) -> None:
    kind = rec.pop("rec")
    rec.pop("session_id", None)
    if kind == "iteration":
        log.iterations.append(IterationRecord(session_id=log.session_id, **rec))
    elif kind == "test":
        log.tests[rec["kind"]] = TestResult(
            kind=rec["kind"],
            per_round_scores=tuple(rec["per_round_scores"]),
            total=rec["total"],
            at_ms=rec.get("at_ms", 0),
        )
    elif kind == "questionnaire":
        log.questionnaire = rec
    elif kind == "protocol_error":
        log.protocol_errors.append(rec)
    elif kind == "footer":
        log.footer = rec
    else:
        raise ValueError(f"unknown record kind {kind!r}")


def parse_log_lines(lines, source: str = "<log>") -> list[SessionLog]:
    """Parse JSONL records into per-session logs (input may interleave sessions)."""
    logs: dict[str, SessionLog] = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise LogFormatError(source, lineno, f"invalid JSON record: {e.msg}") from e
        if not isinstance(rec, dict) or "rec" not in rec or "session_id" not in rec:
            raise LogFormatError(source, lineno, "record must be an object with rec and session_id")
        sid = rec["session_id"]
        if rec["rec"] == "header":
            if sid in logs:
                raise LogFormatError(source, lineno, f"duplicate header for session {sid!r}")
            header = dict(rec)
            header.pop("rec")
            logs[sid] = SessionLog(header=header)
            continue
        if sid not in logs:
            raise LogFormatError(source, lineno, f"record for session {sid!r} before its header")
        try:
            _record_into(logs[sid], dict(rec))
        except (ValueError, KeyError, TypeError) as e:
            raise LogFormatError(source, lineno, f"bad {rec.get('rec')} record: {e}") from e
    return list(logs.values())


def read_session_logs(path: Path | str) -> list[SessionLog]:
    """Read logs from one JSONL file or every ``*.jsonl`` under a directory."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.jsonl"))
        logs: list[SessionLog] = []
        for f in files:
            logs.extend(read_session_logs(f))
        return logs
    with open(path, encoding="utf-8") as f:
        return parse_log_lines(f, source=str(path))

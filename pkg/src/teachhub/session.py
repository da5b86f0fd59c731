"""Per-session interaction state machine.

One session walks a tutor (human or simulated) and the tutee agent through:
intro -> pre-test -> 15 question/feedback turns (with timed reminder and
hint-invitation prompts) -> post-test -> questionnaire -> outro. The machine
is pure with respect to time: it never reads a clock, all timestamps arrive
with the events, so a virtual clock replays any session bit-identically.

Operations return lists of :mod:`effects <teachhub.session>`: plain data
executed elsewhere (UI client, robot backend). In the self-practice condition
the same machine runs with all robot-directed effects suppressed and the
tutor answering the questions directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from .games import GameSpec, Schedule, TestResult, TestSpec, make_schedule, make_test, score_test
from .learner import FeedbackSignal, FeedbackSource, LearnerConfig, QTable, apply_feedback, greedy_accuracy, new_q_table, select_action
from .records import IterationRecord, SessionLog
from .robot import script_phrases


class Condition(str, Enum):
    LEARNING_BY_TEACHING = "learning_by_teaching"
    SELF_PRACTICE = "self_practice"


class Phase(str, Enum):
    INTRO = "intro"
    TEST = "test"
    POSING = "posing"
    AWAIT_FEEDBACK = "await_feedback"
    REVIEW = "review"
    QUESTIONNAIRE = "questionnaire"
    COMPLETED = "completed"


class SessionStateError(RuntimeError):
    """An operation was attempted in a phase that forbids it."""


# ---------------------------------------------------------------------------
# effects (hub -> clients/robot) and events (clients -> hub)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShowQuestion:
    iteration: int
    state_id: str
    prompt: str
    options: tuple[str, ...]
    hint: str
    progress_done: int
    progress_total: int
    correct_action: int | None = None  # only populated in self-practice


@dataclass(frozen=True)
class RobotAnswer:
    action: int
    label: str


@dataclass(frozen=True)
class ShowFeedbackButtons:
    pass


@dataclass(frozen=True)
class RobotSay:
    text: str


@dataclass(frozen=True)
class EyeColor:
    color: str  # green | red | neutral


@dataclass(frozen=True)
class GestureCue:
    cue: str


@dataclass(frozen=True)
class ShowReview:
    state_id: str
    correct_action: int
    correct_label: str
    hint: str


@dataclass(frozen=True)
class PromptReminder:
    pass


@dataclass(frozen=True)
class InviteHint:
    pass


@dataclass(frozen=True)
class RobotSleep:
    pass


@dataclass(frozen=True)
class ShowTest:
    kind: str
    test: TestSpec


@dataclass(frozen=True)
class QuestionnaireItem:
    item_id: str
    subscale: str  # enjoyment | competence | engagement | difficulty
    prompt: str


@dataclass(frozen=True)
class ShowQuestionnaire:
    items: tuple[QuestionnaireItem, ...]


@dataclass(frozen=True)
class SessionEnd:
    pass


Effect = Union[
    ShowQuestion,
    RobotAnswer,
    ShowFeedbackButtons,
    RobotSay,
    EyeColor,
    GestureCue,
    ShowReview,
    PromptReminder,
    InviteHint,
    RobotSleep,
    ShowTest,
    ShowQuestionnaire,
    SessionEnd,
]

# Effects that exist only because a robot is present; the self-practice
# condition suppresses them wholesale.
ROBOT_EFFECTS = (RobotAnswer, RobotSay, EyeColor, GestureCue, RobotSleep)


@dataclass(frozen=True)
class FeedbackGiven:
    h: int
    action: int | None = None  # the tutor's own pick, self-practice only
    source: FeedbackSource = FeedbackSource.HUMAN


@dataclass(frozen=True)
class HintOpened:
    pass


@dataclass(frozen=True)
class HintClosed:
    pass


@dataclass(frozen=True)
class TestResponses:
    __test__ = False  # not a pytest class
    kind: str
    responses: tuple[int, ...]


@dataclass(frozen=True)
class QuestionnaireResponses:
    responses: dict[str, int]


@dataclass(frozen=True)
class ClockTick:
    pass


SessionEvent = Union[FeedbackGiven, HintOpened, HintClosed, TestResponses, QuestionnaireResponses, ClockTick]


QUESTIONNAIRE_ITEMS: tuple[QuestionnaireItem, ...] = (
    QuestionnaireItem("enjoy_fun", "enjoyment", "Did you have fun playing this game?"),
    QuestionnaireItem("enjoy_again", "enjoyment", "Would you like to play this game again?"),
    QuestionnaireItem("enjoy_liked", "enjoyment", "How much did you like this activity?"),
    QuestionnaireItem("comp_good", "competence", "Do you think you did a good job today?"),
    QuestionnaireItem("comp_answers", "competence", "Was it easy for you to know the right answers?"),
    QuestionnaireItem("comp_proud", "competence", "How proud are you of how you played?"),
    QuestionnaireItem("eng_attention", "engagement", "Did you pay attention during the whole game?"),
    QuestionnaireItem("eng_effort", "engagement", "Did you try your best while playing?"),
    QuestionnaireItem("eng_time", "engagement", "Did the time fly while you were playing?"),
    QuestionnaireItem("difficulty", "difficulty", "How hard was this game for you?"),
)


@dataclass(frozen=True)
class SessionConfig:
    """Per-session settings; timeout defaults follow the classroom protocol."""

    game_id: str
    tutor_pseudonym: str
    learner: LearnerConfig = LearnerConfig()
    condition: Condition = Condition.LEARNING_BY_TEACHING
    prompt_after_ms: int = 10_000
    hint_invite_extra_ms: int = 15_000
    hard_timeout_ms: int = 120_000
    review_ms: int = 4_000
    schedule_seed: int = 0
    gesture_on_correct: bool = True

    def __post_init__(self) -> None:
        if not self.tutor_pseudonym:
            raise ValueError("tutor_pseudonym must be non-empty")
        for name in ("prompt_after_ms", "hint_invite_extra_ms", "hard_timeout_ms", "review_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _derived_seed(base: int, stream: int) -> int:
    return int(np.random.SeedSequence(entropy=(base, stream)).generate_state(1)[0])


@dataclass
class _AwaitState:
    state_id: str
    action: int | None
    answered_at: int
    prompted: bool = False
    hint_invited: bool = False
    hint_open_since: int | None = None
    hint_ms: int = 0


class TeachingSession:
    """State machine for one tutoring session; single logical writer per instance."""

    def __init__(self, session_id: str, config: SessionConfig, game: GameSpec, created_ms: int = 0):
        if config.game_id != game.game_id:
            raise ValueError(f"config is for game {config.game_id!r}, got {game.game_id!r}")
        self.session_id = session_id
        self.config = config
        self.game = game
        self.rng = np.random.default_rng(config.learner.rng_seed)
        self.q: QTable = new_q_table(game, config.learner)
        self.schedule: Schedule = make_schedule(game, config.schedule_seed)
        self._key = game.answer_key()
        self._test_seeds = {k: _derived_seed(config.schedule_seed, i + 1) for i, k in enumerate(("pre", "post"))}
        self._questionnaire_seed = _derived_seed(config.schedule_seed, 9)

        self.phase = Phase.INTRO
        self.test_kind: str | None = None
        self._active_test: TestSpec | None = None
        self.iteration = 0  # completed or abandoned turns
        self._await: _AwaitState | None = None
        self._review_since: int | None = None
        self.questionnaire_done = False
        self.finalized = False

        self._iterations: list[IterationRecord] = []
        self._tests: dict[str, TestResult] = {}
        self._questionnaire: dict | None = None
        self._protocol_errors: list[dict] = []
        from . import __version__

        self._header = {
            "session_id": session_id,
            "tool_version": __version__,
            "game_id": game.game_id,
            "title": game.title,
            "condition": config.condition.value,
            "pseudonym": config.tutor_pseudonym,
            "created_ms": created_ms,
            "alpha": config.learner.alpha,
            "initial_q": config.learner.initial_q,
            "seeds": {
                "learner": config.learner.rng_seed,
                "schedule": config.schedule_seed,
                "test_pre": self._test_seeds["pre"],
                "test_post": self._test_seeds["post"],
                "questionnaire": self._questionnaire_seed,
            },
            "timeouts": {
                "prompt_after_ms": config.prompt_after_ms,
                "hint_invite_extra_ms": config.hint_invite_extra_ms,
                "hard_timeout_ms": config.hard_timeout_ms,
                "review_ms": config.review_ms,
            },
        }

    # -- helpers ------------------------------------------------------------

    @property
    def is_robot_condition(self) -> bool:
        return self.config.condition is Condition.LEARNING_BY_TEACHING

    def _say(self, phase: str) -> RobotSay:
        return RobotSay(script_phrases(self.game, phase, tutor=self.config.tutor_pseudonym))

    def _filtered(self, effects: list[Effect]) -> list[Effect]:
        if self.is_robot_condition:
            return effects
        return [e for e in effects if not isinstance(e, ROBOT_EFFECTS)]

    def note_protocol_error(self, detail: str, now_ms: int) -> None:
        self._protocol_errors.append({"detail": detail, "at_ms": now_ms})

    def _protocol_error(self, detail: str, now_ms: int) -> list[Effect]:
        self.note_protocol_error(detail, now_ms)
        return []

    def greedy_accuracy(self) -> float:
        return greedy_accuracy(self.q, self._key)

    def iterations_total(self) -> int:
        return len(self.schedule.order)

    # -- lifecycle ----------------------------------------------------------

    def start(self, now_ms: int) -> list[Effect]:
        if self.phase is not Phase.INTRO:
            raise SessionStateError("session already started")
        effects: list[Effect] = [self._say("intro"), self._show_test("pre")]
        return self._filtered(effects)

    def _show_test(self, kind: str) -> ShowTest:
        self._active_test = make_test(self.game, kind, self._test_seeds[kind])
        self.phase = Phase.TEST
        self.test_kind = kind
        return ShowTest(kind=kind, test=self._active_test)

    def advance(self, now_ms: int) -> list[Effect]:
        """Pose the next scheduled question, or move to the post-test when done."""
        if self.phase not in (Phase.POSING, Phase.REVIEW):
            raise SessionStateError(f"cannot advance from phase {self.phase.value}")
        if self.iteration >= len(self.schedule.order):
            return self._filtered([self._show_test("post")])
        state_id = self.schedule.order[self.iteration]
        question = self.game.question(state_id)
        action = select_action(self.q, state_id, self.rng) if self.is_robot_condition else None
        effects: list[Effect] = [
            ShowQuestion(
                iteration=self.iteration,
                state_id=state_id,
                prompt=question.prompt,
                options=question.options,
                hint=question.hint,
                progress_done=self.iteration,
                progress_total=len(self.schedule.order),
                correct_action=None if self.is_robot_condition else question.correct_action,
            )
        ]
        if action is not None:
            effects.append(RobotAnswer(action=action, label=question.options[action]))
        effects.append(ShowFeedbackButtons())
        self.phase = Phase.AWAIT_FEEDBACK
        self._await = _AwaitState(state_id=state_id, action=action, answered_at=now_ms)
        self._review_since = None
        return self._filtered(effects)

    # -- events -------------------------------------------------------------

    def handle_event(self, event: SessionEvent, now_ms: int) -> list[Effect]:
        if isinstance(event, FeedbackGiven):
            return self.handle_feedback(event, now_ms)
        if isinstance(event, (HintOpened, HintClosed)):
            return self.record_hint(event, now_ms)
        if isinstance(event, TestResponses):
            return self._on_test(event, now_ms)
        if isinstance(event, QuestionnaireResponses):
            return self._on_questionnaire(event, now_ms)
        if isinstance(event, ClockTick):
            return self.tick(now_ms)
        return self._protocol_error(f"unknown event {type(event).__name__}", now_ms)

    def handle_feedback(self, event: FeedbackGiven, now_ms: int) -> list[Effect]:
        if self.phase is not Phase.AWAIT_FEEDBACK or self._await is None:
            return self._protocol_error(
                f"feedback outside await_feedback (phase {self.phase.value})", now_ms
            )
        aw = self._await
        question = self.game.question(aw.state_id)
        if self.is_robot_condition:
            if event.h not in (-1, 1):
                return self._protocol_error(f"feedback h must be -1 or +1, got {event.h!r}", now_ms)
            action = aw.action
            assert action is not None
            h = event.h
        else:
            # Tutor answers directly; their pick is graded against the key and
            # the client-supplied h is advisory only.
            if event.action is None or not 0 <= event.action < self.game.n_actions:
                return self._protocol_error(
                    f"self-practice feedback needs a valid action, got {event.action!r}", now_ms
                )
            action = event.action
            h = 1 if action == question.correct_action else -1

        if aw.hint_open_since is not None:
            aw.hint_ms += max(0, now_ms - aw.hint_open_since)
            aw.hint_open_since = None

        self.q = apply_feedback(
            self.q,
            aw.state_id,
            action,
            FeedbackSignal(h=h, source=event.source, at_ms=now_ms),
            self.config.learner,
        )
        robot_correct = action == question.correct_action
        self._iterations.append(
            IterationRecord(
                session_id=self.session_id,
                index=self.iteration,
                state_id=aw.state_id,
                robot_action=action,
                robot_correct=robot_correct,
                h_given=h,
                feedback_correct=(h == 1) == robot_correct,
                time_ms=max(0, now_ms - aw.answered_at),
                hint_ms=aw.hint_ms,
            )
        )

        effects: list[Effect] = [EyeColor("green" if h == 1 else "red")]
        effects.append(self._say("ack_correct" if h == 1 else "ack_incorrect"))
        if h == -1:
            effects.append(
                ShowReview(
                    state_id=aw.state_id,
                    correct_action=question.correct_action,
                    correct_label=question.options[question.correct_action],
                    hint=question.hint,
                )
            )
        if question.gesture_cue and (h == -1 or self.config.gesture_on_correct):
            effects.append(GestureCue(question.gesture_cue))

        self.iteration += 1
        self._await = None
        if h == -1:
            self.phase = Phase.REVIEW
            self._review_since = now_ms
        else:
            self.phase = Phase.POSING
        return self._filtered(effects)

    def tick(self, now_ms: int) -> list[Effect]:
        effects: list[Effect] = []
        if self.phase is Phase.AWAIT_FEEDBACK and self._await is not None:
            aw = self._await
            elapsed = now_ms - aw.answered_at
            if not aw.prompted and elapsed >= self.config.prompt_after_ms:
                aw.prompted = True
                effects += [PromptReminder(), self._say("reminder")]
            invite_at = self.config.prompt_after_ms + self.config.hint_invite_extra_ms
            if not aw.hint_invited and elapsed >= invite_at:
                aw.hint_invited = True
                effects += [InviteHint(), self._say("hint_invite")]
            if elapsed >= self.config.hard_timeout_ms:
                self._abandon_iteration(now_ms)
        elif self.phase is Phase.REVIEW and self._review_since is not None:
            if now_ms - self._review_since >= self.config.review_ms:
                self.phase = Phase.POSING
                self._review_since = None
        return self._filtered(effects)

    def _abandon_iteration(self, now_ms: int) -> None:
        aw = self._await
        assert aw is not None
        if aw.hint_open_since is not None:
            aw.hint_ms += max(0, now_ms - aw.hint_open_since)
            aw.hint_open_since = None
        self._iterations.append(
            IterationRecord(
                session_id=self.session_id,
                index=self.iteration,
                state_id=aw.state_id,
                robot_action=aw.action,
                robot_correct=None,
                h_given=None,
                feedback_correct=None,
                time_ms=max(0, now_ms - aw.answered_at),
                hint_ms=aw.hint_ms,
                non_response=True,
            )
        )
        self.iteration += 1
        self._await = None
        self.phase = Phase.POSING

    def record_hint(self, event: HintOpened | HintClosed, now_ms: int) -> list[Effect]:
        if self.phase is not Phase.AWAIT_FEEDBACK or self._await is None:
            return self._protocol_error("hint event outside await_feedback", now_ms)
        aw = self._await
        if isinstance(event, HintOpened):
            if aw.hint_open_since is not None:
                return self._protocol_error("hint opened twice", now_ms)
            aw.hint_open_since = now_ms
        else:
            if aw.hint_open_since is None:
                return self._protocol_error("hint closed without being opened", now_ms)
            aw.hint_ms += max(0, now_ms - aw.hint_open_since)
            aw.hint_open_since = None
        return []

    def _on_test(self, event: TestResponses, now_ms: int) -> list[Effect]:
        if self.phase is not Phase.TEST or self._active_test is None or event.kind != self.test_kind:
            return self._protocol_error(
                f"test responses for {event.kind!r} outside matching test phase", now_ms
            )
        try:
            result = score_test(self._active_test, event.responses, at_ms=now_ms)
        except ValueError as e:
            return self._protocol_error(str(e), now_ms)
        self._tests[event.kind] = result
        self._active_test = None
        if event.kind == "pre":
            self.phase = Phase.POSING
            self.test_kind = None
            return []
        # post-test -> questionnaire (both conditions; self-practice may skip at finalize)
        self.phase = Phase.QUESTIONNAIRE
        self.test_kind = None
        order = np.random.default_rng(self._questionnaire_seed).permutation(len(QUESTIONNAIRE_ITEMS))
        items = tuple(QUESTIONNAIRE_ITEMS[int(i)] for i in order)
        return self._filtered([ShowQuestionnaire(items=items)])

    def _on_questionnaire(self, event: QuestionnaireResponses, now_ms: int) -> list[Effect]:
        if self.phase is not Phase.QUESTIONNAIRE:
            return self._protocol_error("questionnaire responses outside questionnaire phase", now_ms)
        expected = {item.item_id for item in QUESTIONNAIRE_ITEMS}
        if set(event.responses) != expected:
            return self._protocol_error("questionnaire responses must cover every item exactly", now_ms)
        if not all(isinstance(v, int) and 1 <= v <= 5 for v in event.responses.values()):
            return self._protocol_error("questionnaire ratings must be integers in 1..5", now_ms)
        self._questionnaire = {"responses": dict(sorted(event.responses.items())), "at_ms": now_ms}
        self.questionnaire_done = True
        self.phase = Phase.COMPLETED
        return []

    # -- completion ---------------------------------------------------------

    def can_finalize(self) -> bool:
        if self.finalized:
            return False
        if self.is_robot_condition:
            return self.questionnaire_done
        return "post" in self._tests

    def finalize(self, now_ms: int) -> tuple[list[Effect], SessionLog]:
        if self.finalized:
            raise SessionStateError("session already finalized")
        if not self.can_finalize():
            raise SessionStateError(
                "cannot finalize: questionnaire (teaching condition) or post-test "
                "(self-practice) not completed"
            )
        self.finalized = True
        self.phase = Phase.COMPLETED
        effects: list[Effect] = [self._say("outro"), RobotSleep(), SessionEnd()]
        return self._filtered(effects), self.make_log()

    def make_log(self) -> SessionLog:
        from .learner import dump_snapshot

        footer = None
        if self.finalized:
            footer = {
                "iterations": len(self._iterations),
                "final_greedy_accuracy": self.greedy_accuracy(),
                "qtable": dump_snapshot(self.q),
            }
        return SessionLog(
            header=dict(self._header),
            iterations=list(self._iterations),
            tests=dict(self._tests),
            questionnaire=self._questionnaire,
            protocol_errors=list(self._protocol_errors),
            footer=footer,
        )

    # -- client view (reconnect snapshot) ------------------------------------

    def view(self) -> dict:
        """Current client-facing state, enough to resume a UI after reconnect."""
        v: dict = {
            "session_id": self.session_id,
            "phase": self.phase.value,
            "condition": self.config.condition.value,
            "game_id": self.game.game_id,
            "title": self.game.title,
            "pseudonym": self.config.tutor_pseudonym,
            "progress_done": self.iteration,
            "progress_total": len(self.schedule.order),
            "feedback_enabled": self.phase is Phase.AWAIT_FEEDBACK,
        }
        if self.phase is Phase.AWAIT_FEEDBACK and self._await is not None:
            question = self.game.question(self._await.state_id)
            v["question"] = {
                "state_id": question.state_id,
                "prompt": question.prompt,
                "options": list(question.options),
                "hint": question.hint,
            }
            if self._await.action is not None:
                v["robot_answer"] = self._await.action
            if not self.is_robot_condition:
                v["correct_action"] = question.correct_action
        if self.phase is Phase.TEST and self._active_test is not None:
            v["test"] = {
                "kind": self._active_test.kind,
                "rounds": [
                    {
                        "round_id": r.round_id,
                        "title": r.title,
                        "items": [
                            {"prompt": i.prompt, "options": list(i.options)} for i in r.items
                        ],
                    }
                    for r in self._active_test.rounds
                ],
            }
        if self.phase is Phase.QUESTIONNAIRE:
            order = np.random.default_rng(self._questionnaire_seed).permutation(len(QUESTIONNAIRE_ITEMS))
            v["questionnaire"] = [
                {
                    "item_id": QUESTIONNAIRE_ITEMS[int(i)].item_id,
                    "subscale": QUESTIONNAIRE_ITEMS[int(i)].subscale,
                    "prompt": QUESTIONNAIRE_ITEMS[int(i)].prompt,
                }
                for i in order
            ]
        return v

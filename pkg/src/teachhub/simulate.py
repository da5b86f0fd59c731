"""Parametric tutor simulation for closed-loop batches.

Two code paths exist on purpose and are kept statistically equivalent:

* :func:`run_batch` drives complete orchestrated sessions through the hub
  with a virtual clock (pre-test, every question/feedback turn including
  reminder and hint-invite timing, post-test, questionnaire, finalize) and
  produces session logs schema-identical to human sessions.
* :func:`monte_carlo_oracle` is the brute-force loop (learner + schedule +
  noisy judge, nothing else) used to pin expected values that the full
  pipeline is then checked against.

All randomness is drawn from streams derived from ``(seed, session_index)``,
so results are bit-identical for a given seed and independent of any worker
scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .games import GameSpec, make_test, score_test
from .hub import SessionHub
from .learner import FeedbackSignal, FeedbackSource, LearnerConfig, apply_feedback, greedy_accuracy, new_q_table, select_action
from .records import SessionLog
from .session import (
    ClockTick,
    Condition,
    FeedbackGiven,
    HintClosed,
    HintOpened,
    Phase,
    QUESTIONNAIRE_ITEMS,
    QuestionnaireResponses,
    RobotAnswer,
    SessionConfig,
    ShowQuestion,
    ShowTest,
    TestResponses,
)


@dataclass(frozen=True)
class TutorProfile:
    """Behavioural model of one tutor.

    ``feedback_accuracy`` is the probability of a truthful judgment; wrong
    judgments are inverted, never omitted. ``non_response_probability`` is the
    chance of stalling past both timed prompts before answering (it exercises
    the reminder/hint-invite path; the tutor still answers afterwards).
    Latency and hint-duration magnitudes default to realistic classroom
    values (~9 s per turn, ~1.1 s hint openings).
    """

    feedback_accuracy: float = 0.89
    latency_log_mu: float = math.log(9300.0)
    latency_log_sigma: float = 0.55
    hint_probability: float = 0.15
    hint_log_mu: float = math.log(1150.0)
    hint_log_sigma: float = 0.8
    non_response_probability: float = 0.05
    test_accuracy: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("feedback_accuracy", "hint_probability", "non_response_probability"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.test_accuracy is not None and not 0.0 <= self.test_accuracy <= 1.0:
            raise ValueError(f"test_accuracy must be in [0, 1], got {self.test_accuracy}")
        for name in ("latency_log_sigma", "hint_log_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("latency_log_mu", "hint_log_mu"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def effective_test_accuracy(self) -> float:
        return self.feedback_accuracy if self.test_accuracy is None else self.test_accuracy


def judge(robot_correct: bool, profile: TutorProfile, rng: np.random.Generator) -> FeedbackSignal:
    """Bernoulli(feedback_accuracy) truthful judgment; otherwise inverted."""
    truthful = rng.random() < profile.feedback_accuracy
    h_true = 1 if robot_correct else -1
    return FeedbackSignal(h=h_true if truthful else -h_true, source=FeedbackSource.SIMULATED)


@dataclass(frozen=True)
class SessionSummary:
    session_id: str
    pseudonym: str
    condition: str
    game_id: str
    pre: int
    post: int
    retention: int
    final_accuracy: float
    feedback_accuracy: float
    mean_time_ms: float
    total_hint_ms: int


@dataclass(frozen=True)
class BatchResult:
    """Aggregates over one simulated batch; includes everything needed to replay."""

    game_id: str
    condition: str
    n_sessions: int
    seed: int
    alpha: float
    feedback_accuracy_param: float
    accuracy_curve: tuple[float, ...]
    final_mean: float
    final_sd: float
    final_quantiles: dict[str, float]
    feedback_accuracy_mean: float
    feedback_accuracy_sd: float
    mean_time_ms: float
    mean_hint_ms: float
    summaries: tuple[SessionSummary, ...]


def _session_streams(seed: int, index: int) -> tuple[int, int, int, int]:
    state = np.random.SeedSequence(entropy=(seed, index)).generate_state(4)
    return tuple(int(v) for v in state)  # type: ignore[return-value]


def _respond_to_test(test, accuracy: float, rng: np.random.Generator) -> tuple[int, ...]:
    responses = []
    for item in test.all_items():
        if rng.random() < accuracy:
            responses.append(item.correct)
        else:
            wrong = [i for i in range(len(item.options)) if i != item.correct]
            responses.append(wrong[int(rng.integers(len(wrong)))])
    return tuple(responses)


def _find(effects, effect_type):
    for e in effects:
        if isinstance(e, effect_type):
            return e
    return None


def run_session(
    hub: SessionHub,
    session_id: str,
    config: SessionConfig,
    profile: TutorProfile,
    rng: np.random.Generator,
    test_rng: np.random.Generator,
    accuracy_curve_sink: np.ndarray | None = None,
) -> SessionLog:
    """Drive one orchestrated session with the simulated tutor (virtual clock)."""
    game = hub.games[config.game_id]
    key = game.answer_key()
    now = 0
    _, effects = hub.create_session(config, session_id=session_id, now_ms=now)
    session = hub.session(session_id)

    # pre-test
    test = _find(effects, ShowTest)
    now += 60_000
    effects = hub.handle_event(
        session_id,
        TestResponses(kind="pre", responses=_respond_to_test(test.test, profile.effective_test_accuracy, test_rng)),
        now,
    )

    iteration = 0
    while session.phase in (Phase.AWAIT_FEEDBACK, Phase.REVIEW):
        question = _find(effects, ShowQuestion)
        answer = _find(effects, RobotAnswer)
        answered_at = now
        if config.condition is Condition.LEARNING_BY_TEACHING:
            robot_correct = answer.action == key[question.state_id]
        else:
            robot_correct = True  # unused: the tutor answers directly below

        stall = rng.random() < profile.non_response_probability
        use_hint = rng.random() < profile.hint_probability
        latency = math.exp(rng.normal(profile.latency_log_mu, profile.latency_log_sigma))
        hint_duration = math.exp(rng.normal(profile.hint_log_mu, profile.hint_log_sigma))

        reminder_at = answered_at + config.prompt_after_ms
        invite_at = reminder_at + config.hint_invite_extra_ms
        if stall:
            # miss both windows, open the hint after the invitation, then answer
            use_hint = True
            hint_open = invite_at + 1000
            feedback_at = hint_open + max(1, int(hint_duration)) + 500
        else:
            feedback_at = answered_at + max(200, int(latency))
            hint_open = answered_at + max(100, int(latency * 0.3))

        if config.condition is Condition.LEARNING_BY_TEACHING:
            fb = judge(robot_correct, profile, rng)
            event = FeedbackGiven(h=fb.h, source=FeedbackSource.SIMULATED)
        else:
            # direct answer: right with probability feedback_accuracy
            correct_action = game.question(question.state_id).correct_action
            if rng.random() < profile.feedback_accuracy:
                pick = correct_action
            else:
                wrong = [i for i in range(game.n_actions) if i != correct_action]
                pick = wrong[int(rng.integers(len(wrong)))]
            event = FeedbackGiven(h=0, action=pick, source=FeedbackSource.SIMULATED)

        agenda: list[tuple[int, object]] = []
        for deadline in (reminder_at, invite_at):
            if feedback_at >= deadline:
                agenda.append((deadline, ClockTick()))
        if use_hint:
            hint_close = min(hint_open + max(1, int(hint_duration)), feedback_at - 100)
            if hint_close > hint_open:
                agenda.append((hint_open, HintOpened()))
                agenda.append((hint_close, HintClosed()))
        agenda.append((feedback_at, event))
        agenda.sort(key=lambda pair: pair[0])
        for t, ev in agenda:
            effects = hub.handle_event(session_id, ev, t)
        now = feedback_at
        if accuracy_curve_sink is not None:
            accuracy_curve_sink[iteration] += session.greedy_accuracy()
        iteration += 1
        if session.phase is Phase.REVIEW:
            now += config.review_ms
            effects = hub.handle_event(session_id, ClockTick(), now)

    # post-test (the ShowTest effect arrived with the last transition)
    assert session.phase is Phase.TEST
    post_show = _find(effects, ShowTest)
    now += 60_000
    hub.handle_event(
        session_id,
        TestResponses(
            kind="post",
            responses=_respond_to_test(post_show.test, profile.effective_test_accuracy, test_rng),
        ),
        now,
    )
    # questionnaire (generous child ratings, 3..5 stars)
    now += 30_000
    ratings = {item.item_id: int(test_rng.integers(3, 6)) for item in QUESTIONNAIRE_ITEMS}
    hub.handle_event(session_id, QuestionnaireResponses(ratings), now)
    now += 2_000
    return hub.finalize(session_id, now)


def run_batch(
    game: GameSpec,
    learner: LearnerConfig,
    profile: TutorProfile,
    n_sessions: int,
    seed: int,
    condition: Condition = Condition.LEARNING_BY_TEACHING,
    out_dir=None,
) -> BatchResult:
    """Simulate ``n_sessions`` full sessions; deterministic for a given seed."""
    if n_sessions < 1:
        raise ValueError("n_sessions must be >= 1")
    hub = SessionHub(games={game.game_id: game}, record_transcripts=False)
    curve = np.zeros(game.iteration_count)
    finals = np.empty(n_sessions)
    fb_accs = np.empty(n_sessions)
    times = np.empty(n_sessions)
    hints = np.empty(n_sessions)
    summaries: list[SessionSummary] = []
    logs: list[SessionLog] = []

    tag = "lbt" if condition is Condition.LEARNING_BY_TEACHING else "sp"
    for i in range(n_sessions):
        learner_seed, schedule_seed, tutor_seed, test_seed = _session_streams(seed, i)
        config = SessionConfig(
            game_id=game.game_id,
            tutor_pseudonym=f"sim-{tag}-{i:05d}",
            learner=replace(learner, rng_seed=learner_seed),
            condition=condition,
            schedule_seed=schedule_seed,
        )
        rng = np.random.default_rng(tutor_seed)
        test_rng = np.random.default_rng(test_seed)
        session_id = f"{game.game_id}-{tag}-{i:05d}"
        log = run_session(hub, session_id, config, profile, rng, test_rng, accuracy_curve_sink=curve)
        logs.append(log)

        finals[i] = log.footer["final_greedy_accuracy"]
        responded = [it for it in log.iterations if it.h_given is not None]
        fb_accs[i] = sum(it.feedback_correct for it in responded) / len(responded)
        times[i] = sum(it.time_ms for it in log.iterations) / len(log.iterations)
        hints[i] = sum(it.hint_ms for it in log.iterations)

        retention_test = make_test(game, "retention", test_seed)
        retention = score_test(
            retention_test, _respond_to_test(retention_test, profile.effective_test_accuracy, test_rng)
        )
        summaries.append(
            SessionSummary(
                session_id=session_id,
                pseudonym=config.tutor_pseudonym,
                condition=condition.value,
                game_id=game.game_id,
                pre=log.tests["pre"].total,
                post=log.tests["post"].total,
                retention=retention.total,
                final_accuracy=float(finals[i]),
                feedback_accuracy=float(fb_accs[i]),
                mean_time_ms=float(times[i]),
                total_hint_ms=int(hints[i]),
            )
        )

    result = BatchResult(
        game_id=game.game_id,
        condition=condition.value,
        n_sessions=n_sessions,
        seed=seed,
        alpha=learner.alpha,
        feedback_accuracy_param=profile.feedback_accuracy,
        accuracy_curve=tuple(float(v) for v in curve / n_sessions),
        final_mean=float(finals.mean()),
        final_sd=float(finals.std(ddof=1)) if n_sessions > 1 else 0.0,
        final_quantiles={
            f"p{q}": float(np.quantile(finals, q / 100)) for q in (5, 25, 50, 75, 95)
        },
        feedback_accuracy_mean=float(fb_accs.mean()),
        feedback_accuracy_sd=float(fb_accs.std(ddof=1)) if n_sessions > 1 else 0.0,
        mean_time_ms=float(times.mean()),
        mean_hint_ms=float(hints.mean()),
        summaries=tuple(summaries),
    )
    if out_dir is not None:
        write_batch(out_dir, result, logs)
    return result


def write_batch(out_dir, result: BatchResult, logs: list[SessionLog]) -> None:
    """Persist logs (JSONL), per-session scores (CSV) and the batch summary (JSON)."""
    import json
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sessions.jsonl", "w", encoding="utf-8") as f:
        for log in logs:
            for line in log.to_lines():
                f.write(line + "\n")
    from .analysis import SCORES_HEADER

    with open(out / "scores.csv", "w", encoding="utf-8") as f:
        f.write(",".join(SCORES_HEADER) + "\n")
        for s in result.summaries:
            f.write(
                f"{s.pseudonym},{s.condition},{s.game_id},{s.pre},{s.post},{s.retention}\n"
            )
    doc = {
        "game_id": result.game_id,
        "condition": result.condition,
        "n_sessions": result.n_sessions,
        "seed": result.seed,
        "alpha": result.alpha,
        "feedback_accuracy_param": result.feedback_accuracy_param,
        "accuracy_curve": list(result.accuracy_curve),
        "final_mean": result.final_mean,
        "final_sd": result.final_sd,
        "final_quantiles": result.final_quantiles,
        "feedback_accuracy_mean": result.feedback_accuracy_mean,
        "feedback_accuracy_sd": result.feedback_accuracy_sd,
        "mean_time_ms": result.mean_time_ms,
        "mean_hint_ms": result.mean_hint_ms,
    }
    (out / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")


@dataclass(frozen=True)
class OracleResult:
    mean: float
    sd: float
    ci95: tuple[float, float]
    n_runs: int
    seed: int


def monte_carlo_oracle(
    game: GameSpec, alpha: float, p: float, n_iterations: int, n_runs: int, seed: int
) -> OracleResult:
    """Brute-force closed loop without the orchestrator: learner + schedule + judge.

    This is the pinned-value oracle for the derived acceptance numbers; keep it
    free of session machinery so the two paths stay independent.
    """
    if n_runs < 1000:
        raise ValueError("the oracle needs n_runs >= 1000 for stable statistics")
    from .games import make_schedule

    sim_game = replace(game, iteration_count=n_iterations) if n_iterations != game.iteration_count else game
    config = LearnerConfig(alpha=alpha)
    profile = TutorProfile(feedback_accuracy=p)
    key = game.answer_key()
    finals = np.empty(n_runs)
    for r in range(n_runs):
        learner_seed, schedule_seed, judge_seed, _ = _session_streams(seed, r)
        rng = np.random.default_rng(learner_seed)
        judge_rng = np.random.default_rng(judge_seed)
        q = new_q_table(sim_game, config)
        for state in make_schedule(sim_game, schedule_seed).order:
            action = select_action(q, state, rng)
            fb = judge(action == key[state], profile, judge_rng)
            q = apply_feedback(q, state, action, fb, config)
        finals[r] = greedy_accuracy(q, key)
    mean = float(finals.mean())
    sd = float(finals.std(ddof=1))
    half = 1.96 * sd / math.sqrt(n_runs)
    return OracleResult(mean=mean, sd=sd, ci95=(mean - half, mean + half), n_runs=n_runs, seed=seed)

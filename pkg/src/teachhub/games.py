"""Quiz-game content: built-in games, loadable content packs, schedules and tests.

A *content pack* is a JSON file that fully defines one game: metadata, the
training questions (with hints, gesture cues and image ids), the three-round
test item bank used for the pre/post/retention tests, and the robot's phrase
templates. See ``docs/content-pack-schema.md`` in the repository for the
field-by-field schema. Everything here is immutable after load and can be
shared freely across concurrent sessions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

PACK_FORMAT = 1
PHRASE_KEYS = ("intro", "ack_correct", "ack_incorrect", "reminder", "hint_invite", "outro")
TEST_KINDS = ("pre", "post", "retention")
TEST_ROUND_COUNT = 3


class PackValidationError(ValueError):
    """A content pack failed validation; ``problems`` lists every violation."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


@dataclass(frozen=True)
class QuestionSpec:
    """One training question: a state with its answer options."""

    state_id: str
    prompt: str
    options: tuple[str, ...]  # action id == position in this tuple
    correct_action: int
    hint: str
    gesture_cue: str | None = None
    image: str | None = None


@dataclass(frozen=True)
class TestItem:
    __test__ = False  # not a pytest class
    prompt: str
    options: tuple[str, ...]
    correct: int


@dataclass(frozen=True)
class TestRound:
    __test__ = False  # not a pytest class
    round_id: str
    title: str
    items: tuple[TestItem, ...]


@dataclass(frozen=True)
class GameSpec:
    """One quiz game plus its test bank and phrase templates."""

    game_id: str
    title: str
    n_actions: int
    iteration_count: int
    questions: tuple[QuestionSpec, ...]
    test_rounds: tuple[TestRound, ...]
    phrases: dict[str, str] = field(default_factory=dict)
    require_unseen_test_prompts: bool = False
    notes: str = ""

    @property
    def n_states(self) -> int:
        return len(self.questions)

    def state_ids(self) -> tuple[str, ...]:
        return tuple(q.state_id for q in self.questions)

    def question(self, state_id: str) -> QuestionSpec:
        for q in self.questions:
            if q.state_id == state_id:
                return q
        raise KeyError(f"unknown state {state_id!r}")

    def answer_key(self) -> dict[str, int]:
        return {q.state_id: q.correct_action for q in self.questions}

    def gesture_cues(self) -> frozenset[str]:
        return frozenset(q.gesture_cue for q in self.questions if q.gesture_cue)


@dataclass(frozen=True)
class Schedule:
    """Question order for one session: shuffled round-robin cycles."""

    order: tuple[str, ...]
    seed: int


@dataclass(frozen=True)
class TestSpec:
    """A materialized knowledge test: same item bank every time, order per seed."""

    __test__ = False  # not a pytest class
    kind: str
    game_id: str
    rounds: tuple[TestRound, ...]
    seed: int

    @property
    def n_items(self) -> int:
        return sum(len(r.items) for r in self.rounds)

    def all_items(self) -> tuple[TestItem, ...]:
        return tuple(item for r in self.rounds for item in r.items)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class
    kind: str
    per_round_scores: tuple[int, ...]
    total: int
    at_ms: int = 0


# ---------------------------------------------------------------------------
# built-in games
# ---------------------------------------------------------------------------


def _bundled_pack_text(name: str) -> str:
    return resources.files("teachhub").joinpath(f"packs/{name}.json").read_text("utf-8")


def builtin_body_parts() -> GameSpec:
    """The 5-state / 3-option vocabulary game from the bundled pack."""
    return parse_content_pack(_bundled_pack_text("body_parts"), source="packs/body_parts.json")


def builtin_grammar() -> GameSpec:
    """The 6-state / 3-category determiner game from the bundled pack."""
    return parse_content_pack(_bundled_pack_text("grammar"), source="packs/grammar.json")


def builtin_games() -> dict[str, GameSpec]:
    games = [builtin_body_parts(), builtin_grammar()]
    return {g.game_id: g for g in games}


# ---------------------------------------------------------------------------
# content pack load / emit / lint
# ---------------------------------------------------------------------------


def load_content_pack(path) -> GameSpec:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise PackValidationError([f"{path}: cannot read pack: {e}"]) from e
    return parse_content_pack(text, source=str(path))


def parse_content_pack(text: str, source: str = "<pack>") -> GameSpec:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise PackValidationError(
            [f"{source}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}"]
        ) from e
    if not isinstance(raw, dict):
        raise PackValidationError([f"{source}:1: pack must be a JSON object"])

    # Source line of each question, for line-precise diagnostics.
    q_lines = [i for i, line in enumerate(text.splitlines(), 1) if '"state_id"' in line]

    problems: list[str] = []

    def where(q_index: int | None = None) -> str:
        if q_index is not None and q_index < len(q_lines):
            return f"{source}:{q_lines[q_index]}"
        return source

    if raw.get("pack_format") != PACK_FORMAT:
        problems.append(f"{source}: unsupported pack_format {raw.get('pack_format')!r}")

    game_id = raw.get("game_id")
    if not isinstance(game_id, str) or not game_id:
        problems.append(f"{source}: game_id must be a non-empty string")
        game_id = "?"
    title = raw.get("title", "")
    if not isinstance(title, str) or not title:
        problems.append(f"{source}: title must be a non-empty string")
        title = str(title)

    n_actions = raw.get("n_actions")
    if not isinstance(n_actions, int) or n_actions < 2:
        problems.append(f"{source}: n_actions must be an integer >= 2, got {n_actions!r}")
        n_actions = 0

    raw_questions = raw.get("questions")
    if not isinstance(raw_questions, list) or not raw_questions:
        raise PackValidationError(problems + [f"{source}: questions must be a non-empty list"])

    iteration_count = raw.get("iteration_count")
    if not isinstance(iteration_count, int) or iteration_count < len(raw_questions):
        problems.append(
            f"{source}: iteration_count must be an integer >= number of states "
            f"({len(raw_questions)}), got {iteration_count!r}"
        )
        iteration_count = len(raw_questions)

    questions: list[QuestionSpec] = []
    seen_states: set[str] = set()
    for i, rq in enumerate(raw_questions):
        if not isinstance(rq, dict):
            problems.append(f"{where(i)}: question #{i} must be an object")
            continue
        state_id = rq.get("state_id")
        if not isinstance(state_id, str) or not state_id:
            problems.append(f"{where(i)}: question #{i} has no state_id")
            state_id = f"?{i}"
        if state_id in seen_states:
            problems.append(f"{where(i)}: duplicate state_id {state_id!r}")
        seen_states.add(state_id)
        options = rq.get("options")
        if not isinstance(options, list) or not all(isinstance(o, str) for o in options):
            problems.append(f"{where(i)}: state {state_id!r}: options must be a list of strings")
            options = []
        if n_actions and len(options) != n_actions:
            problems.append(
                f"{where(i)}: state {state_id!r}: has {len(options)} options, expected {n_actions}"
            )
        if len(set(options)) != len(options):
            problems.append(f"{where(i)}: state {state_id!r}: option labels must be distinct")
        correct = rq.get("correct_action")
        if not isinstance(correct, int) or not (0 <= correct < max(len(options), 1)):
            problems.append(
                f"{where(i)}: state {state_id!r}: correct_action {correct!r} is not a valid option index"
            )
            correct = 0
        hint = rq.get("hint")
        if not isinstance(hint, str) or not hint:
            problems.append(f"{where(i)}: state {state_id!r}: hint must be a non-empty string")
            hint = ""
        gesture = rq.get("gesture_cue")
        if gesture is not None and (not isinstance(gesture, str) or not gesture):
            problems.append(f"{where(i)}: state {state_id!r}: gesture_cue must be null or a non-empty string")
            gesture = None
        image = rq.get("image")
        if image is not None and not isinstance(image, str):
            problems.append(f"{where(i)}: state {state_id!r}: image must be null or a string")
            image = None
        questions.append(
            QuestionSpec(
                state_id=state_id,
                prompt=str(rq.get("prompt", state_id)),
                options=tuple(options),
                correct_action=correct,
                hint=hint,
                gesture_cue=gesture,
                image=image,
            )
        )

    rounds: list[TestRound] = []
    raw_rounds = raw.get("test_rounds")
    if not isinstance(raw_rounds, list):
        problems.append(f"{source}: test_rounds must be a list")
        raw_rounds = []
    if len(raw_rounds) != TEST_ROUND_COUNT:
        problems.append(
            f"{source}: tests must have exactly {TEST_ROUND_COUNT} rounds, got {len(raw_rounds)}"
        )
    for ri, rr in enumerate(raw_rounds):
        if not isinstance(rr, dict):
            problems.append(f"{source}: test round #{ri} must be an object")
            continue
        round_id = str(rr.get("round_id", f"round_{ri}"))
        items: list[TestItem] = []
        raw_items = rr.get("items")
        if not isinstance(raw_items, list) or not raw_items:
            problems.append(f"{source}: test round {round_id!r}: items must be a non-empty list")
            raw_items = []
        for ii, it in enumerate(raw_items):
            if not isinstance(it, dict):
                problems.append(f"{source}: test round {round_id!r} item #{ii} must be an object")
                continue
            opts = it.get("options")
            if not isinstance(opts, list) or len(opts) < 2 or len(set(opts)) != len(opts):
                problems.append(
                    f"{source}: test round {round_id!r} item #{ii}: options must be >= 2 distinct strings"
                )
                opts = ["?", "??"]
            corr = it.get("correct")
            if not isinstance(corr, int) or not (0 <= corr < len(opts)):
                problems.append(
                    f"{source}: test round {round_id!r} item #{ii}: correct {corr!r} is not a valid option index"
                )
                corr = 0
            items.append(TestItem(prompt=str(it.get("prompt", "")), options=tuple(opts), correct=corr))
        rounds.append(TestRound(round_id=round_id, title=str(rr.get("title", "")), items=tuple(items)))

    dup_round_ids = {r.round_id for r in rounds if sum(x.round_id == r.round_id for x in rounds) > 1}
    for rid in sorted(dup_round_ids):
        problems.append(f"{source}: duplicate test round id {rid!r}")

    require_unseen = bool(raw.get("require_unseen_test_prompts", False))
    if require_unseen:
        # Disjointness by full prompt and by the noun (last word of the prompt).
        training_prompts = {q.prompt for q in questions}
        training_nouns = {q.prompt.split()[-1].lower() for q in questions if q.prompt}
        for r in rounds:
            for it in r.items:
                noun = it.prompt.split()[-1].lower() if it.prompt else ""
                if it.prompt in training_prompts or noun in training_nouns:
                    problems.append(
                        f"{source}: test round {r.round_id!r}: item {it.prompt!r} reuses a training noun"
                    )

    phrases = raw.get("phrases")
    if not isinstance(phrases, dict):
        problems.append(f"{source}: phrases must be an object")
        phrases = {}
    for key in PHRASE_KEYS:
        if not isinstance(phrases.get(key), str) or not phrases.get(key):
            problems.append(f"{source}: phrases is missing a non-empty {key!r} template")

    if problems:
        raise PackValidationError(problems)

    return GameSpec(
        game_id=game_id,
        title=title,
        n_actions=n_actions,
        iteration_count=iteration_count,
        questions=tuple(questions),
        test_rounds=tuple(rounds),
        phrases={k: str(v) for k, v in phrases.items()},
        require_unseen_test_prompts=require_unseen,
        notes=str(raw.get("notes", "")),
    )


def emit_content_pack(game: GameSpec) -> str:
    """Serialize a game back to pack JSON; ``parse_content_pack`` inverts this."""
    doc = {
        "pack_format": PACK_FORMAT,
        "game_id": game.game_id,
        "title": game.title,
        "n_actions": game.n_actions,
        "iteration_count": game.iteration_count,
        "require_unseen_test_prompts": game.require_unseen_test_prompts,
        "notes": game.notes,
        "questions": [
            {
                "state_id": q.state_id,
                "prompt": q.prompt,
                "options": list(q.options),
                "correct_action": q.correct_action,
                "hint": q.hint,
                "gesture_cue": q.gesture_cue,
                "image": q.image,
            }
            for q in game.questions
        ],
        "test_rounds": [
            {
                "round_id": r.round_id,
                "title": r.title,
                "items": [
                    {"prompt": it.prompt, "options": list(it.options), "correct": it.correct}
                    for it in r.items
                ],
            }
            for r in game.test_rounds
        ],
        "phrases": dict(game.phrases),
    }
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


# ---------------------------------------------------------------------------
# schedules and tests
# ---------------------------------------------------------------------------


def make_schedule(game: GameSpec, seed: int) -> Schedule:
    """Shuffled round-robin order of length ``iteration_count``.

    Whole permutations of the state set are concatenated and the final cycle
    truncated, so per-state visit counts never differ by more than one.
    """
    rng = np.random.default_rng(seed)
    states = list(game.state_ids())
    order: list[str] = []
    while len(order) < game.iteration_count:
        cycle = list(states)
        rng.shuffle(cycle)
        order.extend(cycle)
    return Schedule(order=tuple(order[: game.iteration_count]), seed=seed)


def make_test(game: GameSpec, kind: str, seed: int) -> TestSpec:
    """Materialize a knowledge test: fixed item bank, item order shuffled per seed."""
    if kind not in TEST_KINDS:
        raise ValueError(f"unknown test kind {kind!r}, expected one of {TEST_KINDS}")
    rng = np.random.default_rng(seed)
    rounds = []
    for r in game.test_rounds:
        idx = rng.permutation(len(r.items))
        rounds.append(replace(r, items=tuple(r.items[int(i)] for i in idx)))
    return TestSpec(kind=kind, game_id=game.game_id, rounds=tuple(rounds), seed=seed)


def score_test(test: TestSpec, responses, at_ms: int = 0) -> TestResult:
    """Score one response per item (option indices, in presentation order)."""
    responses = list(responses)
    if len(responses) != test.n_items:
        raise ValueError(
            f"expected {test.n_items} responses for the {test.kind} test, got {len(responses)}"
        )
    per_round: list[int] = []
    pos = 0
    for r in test.rounds:
        score = 0
        for item in r.items:
            if responses[pos] == item.correct:
                score += 1
            pos += 1
        per_round.append(score)
    return TestResult(
        kind=test.kind, per_round_scores=tuple(per_round), total=sum(per_round), at_ms=at_ms
    )

"""Tabular learner trained by binary evaluative feedback.

The agent keeps one value per (question, answer option) pair, always plays
greedily over the current values (ties broken uniformly at random), and moves
the value of the judged pair a fraction ``alpha`` toward the feedback signal:

    v' = v + alpha * (h - v),   h in {-1, +1}

There is no exploration bonus and no discounting: a fresh table is all zeros,
so the first pass over a question is uniformly random by tie-breaking, and
every later pick exploits whatever the tutor has taught so far.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Mapping

import numpy as np

if TYPE_CHECKING:
    from .games import GameSpec


class FeedbackSource(str, Enum):
    HUMAN = "human"
    SIMULATED = "simulated"


@dataclass(frozen=True)
class FeedbackSignal:
    """One binary judgment of the agent's last answer."""

    h: int
    source: FeedbackSource = FeedbackSource.HUMAN
    at_ms: int = 0

    def __post_init__(self) -> None:
        if self.h not in (-1, 1):
            raise ValueError(f"feedback must be -1 or +1, got {self.h!r}")


@dataclass(frozen=True)
class LearnerConfig:
    """Hyperparameters of the feedback learner."""

    alpha: float = 0.3
    initial_q: float = 0.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class QTable:
    """Value estimates for every (state, action) pair of one game.

    Value semantics: updates return a new table, the original is never
    mutated, so many concurrent sessions can share code without locks as long
    as each session owns its own table.
    """

    state_ids: tuple[str, ...]
    values: np.ndarray  # shape (n_states, n_actions)
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.state_ids)})

    @property
    def n_states(self) -> int:
        return len(self.state_ids)

    @property
    def n_actions(self) -> int:
        return int(self.values.shape[1])

    def row(self, state_id: str) -> np.ndarray:
        if state_id not in self._index:
            raise KeyError(f"unknown state {state_id!r}")
        return self.values[self._index[state_id]]

    def value(self, state_id: str, action: int) -> float:
        row = self.row(state_id)
        if not 0 <= action < len(row):
            raise KeyError(f"unknown action {action!r} for state {state_id!r}")
        return float(row[action])

    def argmax_set(self, state_id: str) -> list[int]:
        """Actions tied for the maximum value in this state."""
        row = self.row(state_id)
        best = row.max()
        return [int(a) for a in np.flatnonzero(row == best)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return self.state_ids == other.state_ids and np.array_equal(self.values, other.values)


def new_q_table(game: "GameSpec", config: LearnerConfig) -> QTable:
    """Fresh table for a game, every entry at ``config.initial_q``."""
    values = np.full((len(game.questions), game.n_actions), config.initial_q, dtype=float)
    return QTable(state_ids=tuple(q.state_id for q in game.questions), values=values)


def select_action(q: QTable, state_id: str, rng: np.random.Generator) -> int:
    """Greedy pick for a state; k-way ties are broken uniformly."""
    ties = q.argmax_set(state_id)
    if len(ties) == 1:
        return ties[0]
    return ties[int(rng.integers(len(ties)))]


def apply_feedback(
    q: QTable, state_id: str, action: int, fb: FeedbackSignal, config: LearnerConfig
) -> QTable:
    """Move one entry toward the feedback signal; all other entries unchanged."""
    old = q.value(state_id, action)  # validates the pair
    values = q.values.copy()
    values[q._index[state_id], action] = old + config.alpha * (fb.h - old)
    return QTable(state_ids=q.state_ids, values=values)


def greedy_accuracy(q: QTable, key: Mapping[str, int]) -> float:
    """Expected fraction of states answered correctly by the greedy policy.

    A state whose k tied-best actions include the correct one contributes 1/k
    (the uniform tie-break), so a fresh 3-option table scores exactly 1/3.
    """
    if set(key) != set(q.state_ids):
        raise ValueError(
            f"answer key covers {sorted(key)} but table has states {sorted(q.state_ids)}"
        )
    correct = np.array([key[s] for s in q.state_ids])
    if correct.min() < 0 or correct.max() >= q.n_actions:
        raise ValueError("answer key contains an out-of-range action")
    ties = q.values == q.values.max(axis=1, keepdims=True)
    hit = ties[np.arange(q.n_states), correct]
    return float((hit / ties.sum(axis=1)).mean())


def dump_snapshot(q: QTable) -> str:
    """Plain-text tabular snapshot: one ``state_id<TAB>action<TAB>value`` line per entry."""
    lines = [f"# qtable {q.n_states} states x {q.n_actions} actions"]
    for state_id in q.state_ids:
        for action in range(q.n_actions):
            lines.append(f"{state_id}\t{action}\t{q.value(state_id, action)!r}")
    return "\n".join(lines) + "\n"


def load_snapshot(text: str) -> QTable:
    """Inverse of :func:`dump_snapshot`."""
    entries: dict[tuple[str, int], float] = {}
    order: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"snapshot line {lineno}: expected 3 tab-separated fields")
        state_id, action_s, value_s = parts
        if state_id not in order:
            order.append(state_id)
        entries[(state_id, int(action_s))] = float(value_s)
    if not entries:
        raise ValueError("empty snapshot")
    n_actions = max(a for _, a in entries) + 1
    values = np.empty((len(order), n_actions), dtype=float)
    for i, state_id in enumerate(order):
        for action in range(n_actions):
            pair = (state_id, action)
            if pair not in entries:
                raise ValueError(f"snapshot is missing entry for {state_id!r} action {action}")
            values[i, action] = entries[pair]
    return QTable(state_ids=tuple(order), values=values)

"""Tests for the feedback-trained tabular learner."""

from __future__ import annotations

import math

import numpy as np
import pytest

from teachhub.games import builtin_body_parts, builtin_grammar, make_schedule
from teachhub.learner import (
    FeedbackSignal,
    LearnerConfig,
    apply_feedback,
    dump_snapshot,
    greedy_accuracy,
    load_snapshot,
    new_q_table,
    select_action,
)


def fb(h: int) -> FeedbackSignal:
    return FeedbackSignal(h=h)


def test_feedback_signal_rejects_anything_but_plus_minus_one():
    for bad in (0, 2, -2, 0.5):
        with pytest.raises(ValueError):
            FeedbackSignal(h=bad)


def test_learner_config_validates_alpha():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            LearnerConfig(alpha=bad)
    assert LearnerConfig(alpha=1.0).alpha == 1.0


def test_new_table_dimensions_and_fill():
    bp = new_q_table(builtin_body_parts(), LearnerConfig())
    assert bp.values.shape == (5, 3)
    assert np.all(bp.values == 0.0)

    gr = new_q_table(builtin_grammar(), LearnerConfig())
    assert gr.values.size == 18

    half = new_q_table(builtin_body_parts(), LearnerConfig(initial_q=0.5))
    assert np.all(half.values == 0.5)


def test_select_action_unique_argmax():
    q = new_q_table(builtin_body_parts(), LearnerConfig())
    q.values[0] = [0.3, -0.3, 0.0]
    rng = np.random.default_rng(0)
    state = q.state_ids[0]
    assert all(select_action(q, state, rng) == 0 for _ in range(50))


def test_select_action_unknown_state():
    q = new_q_table(builtin_body_parts(), LearnerConfig())
    with pytest.raises(KeyError):
        select_action(q, "nope", np.random.default_rng(0))


def test_select_action_three_way_tie_frequencies():
    q = new_q_table(builtin_body_parts(), LearnerConfig())
    rng = np.random.default_rng(42)
    state = q.state_ids[0]
    n = 10_000
    counts = np.bincount([select_action(q, state, rng) for _ in range(n)], minlength=3)
    for c in counts:
        assert abs(c / n - 1 / 3) < 0.02


def test_select_action_two_way_tie_within_binomial_bounds():
    # Oracle: Binomial(n, 1/2); tolerate 3 standard deviations around n/2.
    q = new_q_table(builtin_body_parts(), LearnerConfig())
    q.values[0] = [0.3, 0.3, -0.3]
    rng = np.random.default_rng(7)
    state = q.state_ids[0]
    n = 10_000
    picks = [select_action(q, state, rng) for _ in range(n)]
    assert set(picks) <= {0, 1}
    sd = math.sqrt(n * 0.25)
    assert abs(picks.count(0) - n / 2) < 3 * sd


def test_select_action_deterministic_given_seed():
    q = new_q_table(builtin_body_parts(), LearnerConfig())
    state = q.state_ids[2]
    a = [select_action(q, state, np.random.default_rng(123)) for _ in range(1)]
    b = [select_action(q, state, np.random.default_rng(123)) for _ in range(1)]
    assert a == b


def test_apply_feedback_arithmetic():
    game = builtin_body_parts()
    q = new_q_table(game, LearnerConfig())
    state = q.state_ids[0]

    q2 = apply_feedback(q, state, 0, fb(+1), LearnerConfig(alpha=0.3))
    assert q2.value(state, 0) == pytest.approx(0.3)
    # original untouched (value semantics)
    assert q.value(state, 0) == 0.0

    q3 = new_q_table(game, LearnerConfig(initial_q=1.0))
    for alpha in (0.1, 0.5, 1.0):
        assert apply_feedback(q3, state, 1, fb(+1), LearnerConfig(alpha=alpha)).value(state, 1) == 1.0

    q4 = apply_feedback(q, state, 2, fb(-1), LearnerConfig(alpha=1.0))
    assert q4.value(state, 2) == -1.0


def test_apply_feedback_rejects_unknown_pair():
    q = new_q_table(builtin_body_parts(), LearnerConfig())
    with pytest.raises(KeyError):
        apply_feedback(q, "nope", 0, fb(+1), LearnerConfig())
    with pytest.raises(KeyError):
        apply_feedback(q, q.state_ids[0], 9, fb(+1), LearnerConfig())


def test_apply_feedback_locality():
    q = new_q_table(builtin_body_parts(), LearnerConfig())
    state = q.state_ids[1]
    q2 = apply_feedback(q, state, 2, fb(-1), LearnerConfig(alpha=0.4))
    diff = q2.values != q.values
    assert diff.sum() == 1
    assert diff[1, 2]


def test_greedy_accuracy_fresh_and_converged():
    game = builtin_body_parts()
    key = game.answer_key()
    q = new_q_table(game, LearnerConfig())
    assert greedy_accuracy(q, key) == pytest.approx(1 / 3)

    for state_id, correct in key.items():
        q = apply_feedback(q, state_id, correct, fb(+1), LearnerConfig())
    assert greedy_accuracy(q, key) == 1.0


def test_greedy_accuracy_mixed_table():
    # 2 converged states contribute 1, 3 fresh states contribute 1/3 each.
    game = builtin_body_parts()
    key = game.answer_key()
    q = new_q_table(game, LearnerConfig())
    for state_id in q.state_ids[:2]:
        q = apply_feedback(q, state_id, key[state_id], fb(+1), LearnerConfig())
    assert greedy_accuracy(q, key) == pytest.approx((2 * 1.0 + 3 * (1 / 3)) / 5)


def test_greedy_accuracy_dimension_mismatch():
    q = new_q_table(builtin_body_parts(), LearnerConfig())
    with pytest.raises(ValueError):
        greedy_accuracy(q, {"hand": 0})


def _random_update_walk(seed: int, n_updates: int = 60):
    rng = np.random.default_rng(seed)
    game = builtin_body_parts()
    initial_q = float(rng.uniform(-1, 1))
    config = LearnerConfig(alpha=float(rng.uniform(0.01, 1.0)), initial_q=initial_q)
    q = new_q_table(game, config)
    for _ in range(n_updates):
        state = q.state_ids[int(rng.integers(q.n_states))]
        action = int(rng.integers(q.n_actions))
        h = int(rng.choice([-1, 1]))
        before = q.value(state, action)
        q = apply_feedback(q, state, action, fb(h), config)
        after = q.value(state, action)
        yield config, before, after, h


def test_boundedness_and_contraction_on_random_sequences():
    for seed in range(200):
        for config, before, after, h in _random_update_walk(seed):
            assert -1.0 <= after <= 1.0
            assert abs(after - h) == pytest.approx((1 - config.alpha) * abs(before - h), abs=1e-12)


def test_perfect_feedback_converges_per_state():
    # Any schedule visiting a state n_actions times under truthful feedback
    # leaves the correct action as the greedy pick from then on.
    game = builtin_body_parts()
    key = game.answer_key()
    for seed in range(30):
        config = LearnerConfig(alpha=0.3, rng_seed=seed)
        rng = np.random.default_rng(seed)
        q = new_q_table(game, config)
        schedule = make_schedule(game, seed)
        for state in schedule.order:
            action = select_action(q, state, rng)
            h = 1 if action == key[state] else -1
            q = apply_feedback(q, state, action, fb(h), config)
        assert greedy_accuracy(q, key) == 1.0


def test_identical_seeds_identical_tables():
    game = builtin_grammar()
    key = game.answer_key()

    def run(seed: int):
        config = LearnerConfig(alpha=0.3)
        rng = np.random.default_rng(seed)
        q = new_q_table(game, config)
        for state in make_schedule(game, seed).order:
            action = select_action(q, state, rng)
            q = apply_feedback(q, state, action, fb(1 if action == key[state] else -1), config)
        return q

    assert run(99) == run(99)


def test_snapshot_round_trip():
    game = builtin_grammar()
    q = new_q_table(game, LearnerConfig())
    rng = np.random.default_rng(5)
    config = LearnerConfig(alpha=0.37)
    for _ in range(25):
        state = q.state_ids[int(rng.integers(q.n_states))]
        q = apply_feedback(q, state, int(rng.integers(3)), fb(int(rng.choice([-1, 1]))), config)
    restored = load_snapshot(dump_snapshot(q))
    assert restored == q


def test_snapshot_rejects_garbage():
    with pytest.raises(ValueError):
        load_snapshot("")
    with pytest.raises(ValueError):
        load_snapshot("a\t0\t0.0\na\t2\t0.0\n")  # action 1 missing
    with pytest.raises(ValueError):
        load_snapshot("a\t0\n")

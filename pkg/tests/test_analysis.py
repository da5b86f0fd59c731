"""Tests for behavioural metrics, gains, median split and report building."""

from __future__ import annotations

import pytest

from teachhub.analysis import (
    AnalysisError,
    GainRecord,
    build_report,
    feedback_accuracy,
    gains,
    gains_from_logs,
    median_split,
    read_scores_csv,
    read_table_csv,
    window_compare,
    write_table_csv,
)
from teachhub.games import TestResult
from teachhub.records import IterationRecord, LogFormatError, SessionLog, parse_log_lines


def make_log(
    session_id: str = "s1",
    condition: str = "learning_by_teaching",
    game: str = "body_parts",
    truth_flags=None,
    times=None,
    hints=None,
    pre: int | None = 5,
    post: int | None = 9,
    retention: int | None = 7,
) -> SessionLog:
    truth_flags = list(truth_flags if truth_flags is not None else [True] * 15)
    times = list(times if times is not None else [5000] * len(truth_flags))
    hints = list(hints if hints is not None else [0] * len(truth_flags))
    iterations = []
    for i, (ok, t, hm) in enumerate(zip(truth_flags, times, hints)):
        robot_correct = i % 2 == 0
        h = (1 if robot_correct else -1) if ok else (-1 if robot_correct else 1)
        iterations.append(
            IterationRecord(
                session_id=session_id,
                index=i,
                state_id="hand",
                robot_action=0,
                robot_correct=robot_correct,
                h_given=h,
                feedback_correct=ok,
                time_ms=t,
                hint_ms=hm,
            )
        )
    tests = {}
    if pre is not None:
        tests["pre"] = TestResult(kind="pre", per_round_scores=(pre,), total=pre)
    if post is not None:
        tests["post"] = TestResult(kind="post", per_round_scores=(post,), total=post)
    if retention is not None:
        tests["retention"] = TestResult(kind="retention", per_round_scores=(retention,), total=retention)
    return SessionLog(
        header={
            "session_id": session_id,
            "game_id": game,
            "condition": condition,
            "pseudonym": f"p-{session_id}",
        },
        iterations=iterations,
        tests=tests,
    )


# -- feedback accuracy ---------------------------------------------------------


def test_feedback_accuracy_all_truthful():
    assert feedback_accuracy(make_log()) == 1.0


def test_feedback_accuracy_13_of_15():
    log = make_log(truth_flags=[True] * 13 + [False] * 2)
    assert feedback_accuracy(log) == pytest.approx(13 / 15, abs=5e-5)


def test_feedback_accuracy_empty_log_is_error():
    with pytest.raises(AnalysisError):
        feedback_accuracy(make_log(truth_flags=[]))


# -- gains -----------------------------------------------------------------------


def test_gains_arithmetic():
    rec = gains(5, 9, 7)
    assert rec.knowledge_gain == 4
    assert rec.retention_gain == 2


def test_gains_flat_and_negative():
    assert gains(6, 6, 6).knowledge_gain == 0
    assert gains(6, 6, 6).retention_gain == 0
    assert gains(8, 9, 5).retention_gain == -3  # negative retention is legal


def test_gains_without_retention():
    rec = gains(5, 9, None)
    assert rec.retention_gain is None


# -- median split -----------------------------------------------------------------


def g(pre: int, name: str = "") -> GainRecord:
    return GainRecord(pseudonym=name or f"p{pre}", condition="c", game="g", pre=pre, post=pre, retention=pre)


def test_median_split_even_count():
    low, high = median_split([g(1), g(2), g(3), g(4)])
    assert {r.pre for r in low} == {1, 2}
    assert {r.pre for r in high} == {3, 4}


def test_median_split_odd_count():
    low, high = median_split([g(1), g(2), g(3)])
    assert {r.pre for r in low} == {1, 2}
    assert {r.pre for r in high} == {3}


def test_median_split_all_equal_degenerate():
    low, high = median_split([g(2, "a"), g(2, "b"), g(2, "c")])
    assert len(low) == 3 and high == []


def test_median_split_is_total():
    records = [g(v, str(i)) for i, v in enumerate([3, 1, 4, 1, 5, 9, 2, 6])]
    low, high = median_split(records)
    assert len(low) + len(high) == len(records)
    assert {id(r) for r in low} | {id(r) for r in high} == {id(r) for r in records}


# -- window comparison -------------------------------------------------------------


def test_window_identical_windows_no_effect():
    logs = [make_log(session_id=f"s{i}", times=[4000] * 15) for i in range(8)]
    wc = window_compare(logs, metric="time_ms", k=5)
    assert wc.report.p_value == 1.0
    assert wc.report.effect_size == 0.0


def test_window_strictly_decreasing_times_negative_effect():
    logs = [
        make_log(session_id=f"s{i}", times=[15_000 - 800 * j + 10 * i for j in range(15)])
        for i in range(8)
    ]
    wc = window_compare(logs, metric="time_ms", k=5, alternative="less")
    assert wc.report.effect_size < 0
    assert wc.report.p_value == pytest.approx(1 / 256)  # all 8 differences negative
    assert wc.first_median > wc.last_median


def test_window_short_sessions_excluded_and_counted():
    logs = [make_log(session_id="ok", times=[1000] * 15)]
    logs.append(make_log(session_id="short", truth_flags=[True] * 6, times=[9000] * 6))
    wc = window_compare(logs, k=5)
    assert wc.n_sessions == 1
    assert wc.n_excluded == 1


def test_window_mann_whitney_mode():
    logs = [
        make_log(session_id=f"s{i}", times=[12_000] * 5 + [8000] * 5 + [4000 + i] * 5)
        for i in range(6)
    ]
    wc = window_compare(logs, metric="time_ms", mode="mann-whitney")
    assert wc.report.test == "mann_whitney_u"
    assert wc.report.effect_size < 0


def test_window_exact_p_for_eight_pairs_matches_enumeration():
    # All 8 diffs negative with distinct magnitudes: one-sided exact p = 1/2^8.
    logs = [
        make_log(session_id=f"s{i}", times=[10_000 + 100 * i] * 5 + [0] * 5 + [5000 + 77 * i] * 5)
        for i in range(8)
    ]
    wc = window_compare(logs, k=5, alternative="less")
    assert wc.report.method == "exact"
    assert wc.report.p_value == pytest.approx(2**-8)


# -- scores CSV ---------------------------------------------------------------------


def test_scores_csv_round_trip(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text(
        "pseudonym,condition,game,pre,post,retention\n"
        "12A,learning_by_teaching,body_parts,5,9,7\n"
        "13B,self_practice,body_parts,6,6,\n",
        encoding="utf-8",
    )
    records = read_scores_csv(path)
    assert records[0].knowledge_gain == 4
    assert records[1].retention is None


def test_scores_csv_bad_header(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("name,cond\nx,y\n", encoding="utf-8")
    with pytest.raises(AnalysisError):
        read_scores_csv(path)


def test_scores_csv_bad_value_names_line(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text(
        "pseudonym,condition,game,pre,post,retention\n12A,c,g,five,9,7\n", encoding="utf-8"
    )
    with pytest.raises(AnalysisError) as e:
        read_scores_csv(path)
    assert ":2:" in str(e.value)


# -- log parsing ----------------------------------------------------------------------


def test_log_lines_round_trip_and_digest_stability():
    log = make_log()
    lines = log.to_lines()
    (parsed,) = parse_log_lines(lines)
    assert parsed.to_lines() == lines
    assert parsed.digest() == log.digest()


def test_log_parse_error_names_line():
    log = make_log()
    lines = log.to_lines()
    lines[3] = lines[3][: len(lines[3]) // 2]  # truncate a record mid-JSON
    with pytest.raises(LogFormatError) as e:
        parse_log_lines(lines, source="x.jsonl")
    assert "x.jsonl:4" in str(e.value)


def test_log_record_before_header_rejected():
    log = make_log()
    lines = log.to_lines()
    with pytest.raises(LogFormatError):
        parse_log_lines(lines[1:], source="y.jsonl")


# -- report -----------------------------------------------------------------------------


def two_condition_dataset():
    logs = []
    for i in range(8):
        logs.append(
            make_log(
                session_id=f"lbt{i}",
                condition="learning_by_teaching",
                times=[12_000 - 600 * j + 13 * i for j in range(15)],
                hints=[1200 if j < 5 else 0 for j in range(15)],
                truth_flags=[True] * 14 + [i % 2 == 0],
                pre=4 + i % 3,
                post=9 + i % 4,
                retention=7 + i % 3,
            )
        )
        logs.append(
            make_log(
                session_id=f"sp{i}",
                condition="self_practice",
                times=[1500 + 40 * j + 11 * i for j in range(15)],
                hints=[0] * 15,
                pre=4 + (i + 1) % 4,
                post=7 + i % 3,
                retention=4 + i % 4,
            )
        )
    return logs


def test_report_has_row_per_metric_game_condition():
    logs = two_condition_dataset()
    bundle = build_report(logs, gains_from_logs(logs))
    rows = bundle.tables["metrics_summary"]
    keys = {(r["metric"], r["game"], r["condition"]) for r in rows}
    for metric in ("feedback_accuracy", "time_per_iteration_ms", "hint_time_ms"):
        for condition in ("learning_by_teaching", "self_practice"):
            assert (metric, "body_parts", condition) in keys


def test_report_contains_first_vs_last_and_median_split():
    logs = two_condition_dataset()
    bundle = build_report(logs, gains_from_logs(logs))
    assert any(
        r["condition"] == "learning_by_teaching" and r["metric"] == "time_ms"
        for r in bundle.tables["first_vs_last"]
    )
    assert bundle.tables["median_split"]
    assert bundle.tables["between_conditions"]
    assert "[metrics_summary]" in bundle.text
    assert "conventions" in bundle.text


def test_report_deterministic():
    logs = two_condition_dataset()
    a = build_report(logs, gains_from_logs(logs), meta={"seed": 1})
    b = build_report(logs, gains_from_logs(logs), meta={"seed": 1})
    assert a.text == b.text
    assert a.tables == b.tables


def test_report_empty_dataset_is_error():
    with pytest.raises(AnalysisError):
        build_report([], [])


def test_table_csv_round_trip(tmp_path):
    logs = two_condition_dataset()
    bundle = build_report(logs, gains_from_logs(logs))
    path = tmp_path / "summary.csv"
    write_table_csv(bundle.tables["metrics_summary"], path, meta={"seed": 9})
    rows = read_table_csv(path)
    assert len(rows) == len(bundle.tables["metrics_summary"])
    # re-export of the re-import is byte-identical
    path2 = tmp_path / "summary2.csv"
    write_table_csv(rows, path2, meta={"seed": 9})
    rows2 = read_table_csv(path2)
    assert rows == rows2
    assert path.read_text().splitlines()[0] == "# seed: 9"

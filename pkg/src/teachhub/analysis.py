"""Behavioural metrics, gain scores and the session-log analysis report.

Consumes line-delimited session logs (one record per line, see
:mod:`teachhub.records`) plus an optional per-participant scores table
(``scores.csv`` with header ``pseudonym,condition,game,pre,post,retention``)
and produces per-condition summary tables, first-vs-last window comparisons,
gain and median-split analyses, and the statistical reports that go with
them. Everything is a pure function of its inputs, so re-running an analysis
is byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import statistics
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .records import SessionLog
from .stats import StatReport, mann_whitney_u, shapiro_wilk, t_test_ind, wilcoxon_signed_rank

SCORES_HEADER = ("pseudonym", "condition", "game", "pre", "post", "retention")

CONVENTIONS = (
    "U reported as min(U1,U2); z normal approximation with tie and continuity "
    "corrections; rank-based r = z/sqrt(N); exact enumeration p for small samples; "
    "Wilcoxon drops zero differences; Cohen's d uses the pooled SD; negative "
    "window effects mean the metric decreased from the first to the last window. "
    "Two-sided p unless stated."
)


class AnalysisError(ValueError):
    pass


# ---------------------------------------------------------------------------
# per-log metrics
# ---------------------------------------------------------------------------


def feedback_accuracy(log: SessionLog) -> float:
    """Fraction of responded iterations whose judgment matched the truth."""
    responded = [it for it in log.iterations if it.h_given is not None]
    if not responded:
        raise AnalysisError(f"session {log.session_id!r} has no responded iterations")
    return sum(bool(it.feedback_correct) for it in responded) / len(responded)


def mean_iteration_metric(log: SessionLog, metric: str) -> float:
    if not log.iterations:
        raise AnalysisError(f"session {log.session_id!r} has no iterations")
    return sum(getattr(it, metric) for it in log.iterations) / len(log.iterations)


# ---------------------------------------------------------------------------
# gains and median split
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GainRecord:
    pseudonym: str
    condition: str
    game: str
    pre: int
    post: int
    retention: int | None

    @property
    def knowledge_gain(self) -> int:
        return self.post - self.pre

    @property
    def retention_gain(self) -> int | None:
        return None if self.retention is None else self.retention - self.pre


def gains(pre: int, post: int, retention: int | None, *, pseudonym: str = "", condition: str = "", game: str = "") -> GainRecord:
    """Gain scores are raw differences against the pre-test."""
    return GainRecord(
        pseudonym=pseudonym, condition=condition, game=game, pre=pre, post=post, retention=retention
    )


def median_split(records: list[GainRecord], key: str = "pre") -> tuple[list[GainRecord], list[GainRecord]]:
    """Split into (low, high) groups: low is at or below the sample median."""
    if len(records) < 2:
        raise AnalysisError("median split needs at least 2 records")
    values = [getattr(r, key) for r in records]
    median = statistics.median(values)
    low = [r for r in records if getattr(r, key) <= median]
    high = [r for r in records if getattr(r, key) > median]
    return low, high


def gains_from_logs(logs: list[SessionLog]) -> list[GainRecord]:
    records = []
    for log in logs:
        if "pre" in log.tests and "post" in log.tests:
            retention = log.tests["retention"].total if "retention" in log.tests else None
            records.append(
                GainRecord(
                    pseudonym=log.header.get("pseudonym", log.session_id),
                    condition=log.condition,
                    game=log.game_id,
                    pre=log.tests["pre"].total,
                    post=log.tests["post"].total,
                    retention=retention,
                )
            )
    return records


def read_scores_csv(path: Path | str) -> list[GainRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as f:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    if not rows or tuple(rows[0]) != SCORES_HEADER:
        raise AnalysisError(f"{path}: expected header {','.join(SCORES_HEADER)}")
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(SCORES_HEADER):
            raise AnalysisError(f"{path}:{i}: expected {len(SCORES_HEADER)} columns, got {len(row)}")
        try:
            retention = int(row[5]) if row[5] != "" else None
            records.append(
                GainRecord(
                    pseudonym=row[0],
                    condition=row[1],
                    game=row[2],
                    pre=int(row[3]),
                    post=int(row[4]),
                    retention=retention,
                )
            )
        except ValueError as e:
            raise AnalysisError(f"{path}:{i}: bad score value: {e}") from e
    return records


# ---------------------------------------------------------------------------
# windowed progress comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowComparison:
    metric: str
    k: int
    mode: str
    n_sessions: int
    n_excluded: int
    first_median: float
    last_median: float
    report: StatReport


def _degenerate_report(test: str, n: int) -> StatReport:
    return StatReport(
        test=test, statistic=0.0, p_value=1.0, effect_size=0.0,
        effect_size_name="rank_biserial_r", z=0.0, n1=n, n2=n,
        method="degenerate_no_effect", alternative="two-sided",
    )


def window_compare(
    logs: list[SessionLog],
    metric: str = "time_ms",
    k: int = 5,
    mode: str = "wilcoxon",
    alternative: str = "two-sided",
) -> WindowComparison:
    """Compare per-session means of the first k vs last k iterations.

    The default is the paired signed-rank test on (last - first) differences;
    ``mode="mann-whitney"`` treats the window means as independent samples.
    Sessions shorter than 2k iterations are excluded and counted.
    """
    if metric not in ("time_ms", "hint_ms"):
        raise AnalysisError(f"unsupported metric {metric!r}")
    if mode not in ("wilcoxon", "mann-whitney"):
        raise AnalysisError(f"unsupported mode {mode!r}")
    firsts, lasts = [], []
    excluded = 0
    for log in logs:
        iters = sorted(log.iterations, key=lambda it: it.index)
        if len(iters) < 2 * k:
            excluded += 1
            continue
        firsts.append(sum(getattr(it, metric) for it in iters[:k]) / k)
        lasts.append(sum(getattr(it, metric) for it in iters[-k:]) / k)
    if not firsts:
        raise AnalysisError(f"no session has at least {2 * k} iterations")

    if mode == "wilcoxon":
        try:
            report = wilcoxon_signed_rank(list(zip(lasts, firsts)), alternative=alternative)
        except ValueError:  # identical windows everywhere: no effect by convention
            report = _degenerate_report("wilcoxon_signed_rank", len(firsts))
    else:
        report = mann_whitney_u(lasts, firsts, alternative=alternative)
    return WindowComparison(
        metric=metric,
        k=k,
        mode=mode,
        n_sessions=len(firsts),
        n_excluded=excluded,
        first_median=statistics.median(firsts),
        last_median=statistics.median(lasts),
        report=report,
    )


# ---------------------------------------------------------------------------
# report building
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".6g")
    return str(v)


def _summary_row(values: list[float]) -> dict:
    return {
        "n": len(values),
        "mean": sum(values) / len(values),
        "sd": statistics.stdev(values) if len(values) > 1 else 0.0,
        "median": statistics.median(values),
    }


def _choose_between_test(xs: list[float], ys: list[float]) -> StatReport:
    """t-test when both groups look normal (Shapiro p > .05), otherwise U test."""
    def looks_normal(vals: list[float]) -> bool:
        if not 3 <= len(vals) <= 50 or len(set(vals)) == 1:
            return False
        return shapiro_wilk(vals).p_value > 0.05

    if looks_normal(xs) and looks_normal(ys) and len(set(xs + ys)) > 1:
        try:
            return t_test_ind(xs, ys)
        except ValueError:
            pass
    return mann_whitney_u(xs, ys)


def _stat_row(report: StatReport) -> dict:
    return {
        "test": report.test,
        "statistic": report.statistic,
        "z": report.z,
        "df": report.df,
        "p_value": report.p_value,
        "effect_size": report.effect_size,
        "effect_size_name": report.effect_size_name,
        "n1": report.n1,
        "n2": report.n2,
        "method": report.method,
    }


@dataclass
class ReportBundle:
    text: str
    tables: dict[str, list[dict]]


def build_report(logs: list[SessionLog], gain_records: list[GainRecord], meta: dict | None = None) -> ReportBundle:
    """All summary tables plus a rendered text document, deterministically ordered."""
    if not logs and not gain_records:
        raise AnalysisError("nothing to analyze: no logs and no scores")
    groups: dict[tuple[str, str], list[SessionLog]] = {}
    for log in logs:
        groups.setdefault((log.game_id, log.condition), []).append(log)
    for key in groups:
        groups[key].sort(key=lambda lg: lg.session_id)

    tables: dict[str, list[dict]] = {}

    metric_specs = [
        ("feedback_accuracy", lambda lg: feedback_accuracy(lg)),
        ("time_per_iteration_ms", lambda lg: mean_iteration_metric(lg, "time_ms")),
        ("hint_time_ms", lambda lg: mean_iteration_metric(lg, "hint_ms")),
    ]
    summary_rows = []
    for (game, condition), group in sorted(groups.items()):
        for name, metric_fn in metric_specs:
            values = [metric_fn(lg) for lg in group]
            summary_rows.append({"metric": name, "game": game, "condition": condition, **_summary_row(values)})
    tables["metrics_summary"] = summary_rows

    window_rows = []
    for (game, condition), group in sorted(groups.items()):
        for metric in ("time_ms", "hint_ms"):
            for mode in ("wilcoxon", "mann-whitney"):
                try:
                    wc = window_compare(group, metric=metric, mode=mode)
                except AnalysisError:
                    continue
                window_rows.append(
                    {
                        "game": game,
                        "condition": condition,
                        "metric": metric,
                        "mode": mode,
                        "n": wc.n_sessions,
                        "excluded": wc.n_excluded,
                        "first_median": wc.first_median,
                        "last_median": wc.last_median,
                        **_stat_row(wc.report),
                    }
                )
    tables["first_vs_last"] = window_rows

    gain_groups: dict[tuple[str, str], list[GainRecord]] = {}
    for rec in gain_records:
        gain_groups.setdefault((rec.game, rec.condition), []).append(rec)
    for key in gain_groups:
        gain_groups[key].sort(key=lambda r: r.pseudonym)

    gain_rows = []
    for (game, condition), recs in sorted(gain_groups.items()):
        kg = [float(r.knowledge_gain) for r in recs]
        rg = [float(r.retention_gain) for r in recs if r.retention_gain is not None]
        row = {"game": game, "condition": condition, "n": len(recs)}
        row.update({f"knowledge_gain_{k}": v for k, v in _summary_row(kg).items() if k != "n"})
        if rg:
            row.update({f"retention_gain_{k}": v for k, v in _summary_row(rg).items() if k != "n"})
        gain_rows.append(row)
    tables["gains"] = gain_rows

    between_rows = []
    games = sorted({g for g, _ in gain_groups})
    for game in games:
        conditions = sorted(c for g, c in gain_groups if g == game)
        if len(conditions) != 2:
            continue
        a, b = conditions
        for measure, getter in (
            ("knowledge_gain", lambda r: r.knowledge_gain),
            ("retention_gain", lambda r: r.retention_gain),
        ):
            xs = [float(getter(r)) for r in gain_groups[(game, a)] if getter(r) is not None]
            ys = [float(getter(r)) for r in gain_groups[(game, b)] if getter(r) is not None]
            if len(xs) < 2 or len(ys) < 2:
                continue
            report = _choose_between_test(xs, ys)
            between_rows.append(
                {"game": game, "measure": measure, "group1": a, "group2": b, **_stat_row(report)}
            )
    for game in sorted({g for g, _ in groups}):
        conditions = sorted(c for g, c in groups if g == game)
        if len(conditions) != 2:
            continue
        a, b = conditions
        for metric in ("time_ms", "hint_ms"):
            xs = [mean_iteration_metric(lg, metric) for lg in groups[(game, a)]]
            ys = [mean_iteration_metric(lg, metric) for lg in groups[(game, b)]]
            if len(xs) < 2 or len(ys) < 2:
                continue
            between_rows.append(
                {
                    "game": game,
                    "measure": f"mean_{metric}",
                    "group1": a,
                    "group2": b,
                    **_stat_row(mann_whitney_u(xs, ys)),
                }
            )
    tables["between_conditions"] = between_rows

    split_rows = []
    for (game, condition), recs in sorted(gain_groups.items()):
        if len(recs) < 4:
            continue
        low, high = median_split(recs)
        if not high:
            split_rows.append(
                {
                    "game": game,
                    "condition": condition,
                    "measure": "degenerate",
                    "n_low": len(low),
                    "n_high": 0,
                    "note": "all pre-scores at or below the median",
                }
            )
            continue
        for measure, getter in (
            ("knowledge_gain", lambda r: r.knowledge_gain),
            ("retention_gain", lambda r: r.retention_gain),
        ):
            lo = [float(getter(r)) for r in low if getter(r) is not None]
            hi = [float(getter(r)) for r in high if getter(r) is not None]
            if not lo or not hi:
                continue
            report = mann_whitney_u(lo, hi)
            split_rows.append(
                {
                    "game": game,
                    "condition": condition,
                    "measure": measure,
                    "n_low": len(lo),
                    "n_high": len(hi),
                    "median_low": statistics.median(lo),
                    "median_high": statistics.median(hi),
                    **_stat_row(report),
                }
            )
    tables["median_split"] = split_rows

    text = render_report(tables, meta or {})
    return ReportBundle(text=text, tables=tables)


def render_report(tables: dict[str, list[dict]], meta: dict) -> str:
    out = io.StringIO()
    out.write("# session analysis report\n")
    out.write(f"# tool: teachhub {__version__}\n")
    for key in sorted(meta):
        out.write(f"# {key}: {meta[key]}\n")
    out.write(f"# conventions: {CONVENTIONS}\n")
    for name in sorted(tables):
        rows = tables[name]
        out.write(f"\n[{name}]\n")
        if not rows:
            out.write("(no data)\n")
            continue
        columns: list[str] = []
        for row in rows:
            for col in row:
                if col not in columns:
                    columns.append(col)
        widths = {c: max(len(c), *(len(_fmt(r.get(c))) for r in rows)) for c in columns}
        out.write("  ".join(c.ljust(widths[c]) for c in columns).rstrip() + "\n")
        for row in rows:
            out.write("  ".join(_fmt(row.get(c)).ljust(widths[c]) for c in columns).rstrip() + "\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# CSV export / import
# ---------------------------------------------------------------------------


def write_table_csv(rows: list[dict], path: Path | str, meta: dict | None = None) -> None:
    """CSV with optional ``# key: value`` provenance comment lines up top."""
    columns: list[str] = []
    for row in rows:
        for col in row:
            if col not in columns:
                columns.append(col)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for key in sorted(meta or {}):
            f.write(f"# {key}: {meta[key]}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])


def read_table_csv(path: Path | str) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    reader = csv.reader(lines)
    rows = list(reader)
    if not rows:
        return []
    header = rows[0]
    return [dict(zip(header, row)) for row in rows[1:]]


def iterations_table(logs: list[SessionLog]) -> list[dict]:
    rows = []
    for log in sorted(logs, key=lambda lg: lg.session_id):
        for it in log.iterations:
            rows.append(
                {
                    "session_id": it.session_id,
                    "game": log.game_id,
                    "condition": log.condition,
                    "index": it.index,
                    "state_id": it.state_id,
                    "robot_action": it.robot_action,
                    "robot_correct": it.robot_correct,
                    "h_given": it.h_given,
                    "feedback_correct": it.feedback_correct,
                    "time_ms": it.time_ms,
                    "hint_ms": it.hint_ms,
                    "non_response": it.non_response,
                }
            )
    return rows


def sessions_table(logs: list[SessionLog]) -> list[dict]:
    rows = []
    for log in sorted(logs, key=lambda lg: lg.session_id):
        row = {
            "session_id": log.session_id,
            "game": log.game_id,
            "condition": log.condition,
            "pseudonym": log.header.get("pseudonym", ""),
            "iterations": len(log.iterations),
            "feedback_accuracy": feedback_accuracy(log) if any(it.h_given is not None for it in log.iterations) else None,
            "mean_time_ms": mean_iteration_metric(log, "time_ms") if log.iterations else None,
            "mean_hint_ms": mean_iteration_metric(log, "hint_ms") if log.iterations else None,
            "pre": log.tests["pre"].total if "pre" in log.tests else None,
            "post": log.tests["post"].total if "post" in log.tests else None,
            "final_greedy_accuracy": (log.footer or {}).get("final_greedy_accuracy"),
        }
        rows.append(row)
    return rows


def input_digest(paths: list[Path]) -> str:
    sha = hashlib.sha256()
    for p in sorted(paths):
        sha.update(p.name.encode())
        sha.update(p.read_bytes())
    return sha.hexdigest()

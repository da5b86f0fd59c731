"""``hub-cli``: serve the hub, run simulations, validate content, analyze logs.

Exit codes: 0 success, 2 usage error, 3 data error. Every verb except
``serve`` is a pure pipeline over files: same inputs and seed, same bytes out.
The default log directory can be set with the ``TEACHHUB_LOG_DIR``
environment variable.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    AnalysisError,
    build_report,
    gains_from_logs,
    input_digest,
    iterations_table,
    read_scores_csv,
    sessions_table,
    write_table_csv,
)
from .games import GameSpec, PackValidationError, builtin_games, load_content_pack
from .learner import LearnerConfig
from .records import LogFormatError, read_session_logs
from .session import Condition
from .simulate import TutorProfile, run_batch

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def default_log_dir() -> Path:
    return Path(os.environ.get("TEACHHUB_LOG_DIR", "./logs"))


def resolve_game(name: str) -> GameSpec:
    games = builtin_games()
    if name in games:
        return games[name]
    if Path(name).exists():
        return load_content_pack(name)
    raise UsageError(f"unknown game {name!r}: not a built-in id ({', '.join(games)}) or a pack file")


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .hub import SessionHub
    from .server import create_app

    settings = {
        "host": "127.0.0.1",
        "port": "8765",
        "log_dir": str(default_log_dir()),
        "tick_ms": "250",
        "transcripts": "true",
        "packs": "",
        "static_dir": "",
    }
    if args.config:
        parser = configparser.ConfigParser()
        read = parser.read(args.config)
        if not read:
            raise DataError(f"cannot read config file {args.config!r}")
        if "hub" in parser:
            settings.update({k: v for k, v in parser["hub"].items()})
    if args.host:
        settings["host"] = args.host
    if args.port:
        settings["port"] = str(args.port)

    games = builtin_games()
    for pack_path in filter(None, (p.strip() for p in settings["packs"].split(","))):
        pack = load_content_pack(pack_path)
        games[pack.game_id] = pack

    hub = SessionHub(
        games=games,
        log_dir=settings["log_dir"] or None,
        record_transcripts=settings["transcripts"].lower() in ("1", "true", "yes"),
    )
    static_dir = settings["static_dir"] or None
    app = create_app(hub, tick_ms=int(settings["tick_ms"]), static_dir=static_dir)
    print(f"teachhub {__version__} serving on {settings['host']}:{settings['port']}")
    uvicorn.run(app, host=settings["host"], port=int(settings["port"]), log_level="warning")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    if not 0.0 <= args.accuracy <= 1.0:
        raise UsageError(f"--accuracy must be in [0, 1], got {args.accuracy}")
    if args.sessions < 1:
        raise UsageError("--sessions must be >= 1")
    if not 0.0 < args.alpha <= 1.0:
        raise UsageError(f"--alpha must be in (0, 1], got {args.alpha}")
    game = resolve_game(args.game)
    profile = TutorProfile(
        feedback_accuracy=args.accuracy,
        hint_probability=args.hint_probability,
        non_response_probability=args.non_response_probability,
    )
    result = run_batch(
        game,
        LearnerConfig(alpha=args.alpha),
        profile,
        n_sessions=args.sessions,
        seed=args.seed,
        condition=Condition(args.condition),
        out_dir=args.out,
    )
    half = 1.96 * result.final_sd / max(1, result.n_sessions) ** 0.5
    print(f"game={result.game_id} condition={result.condition} sessions={result.n_sessions} seed={result.seed}")
    print(f"final greedy accuracy: mean={result.final_mean:.4f} sd={result.final_sd:.4f} "
          f"ci95=[{result.final_mean - half:.4f}, {result.final_mean + half:.4f}]")
    print(f"measured feedback accuracy: {result.feedback_accuracy_mean:.4f} "
          f"(profile {result.feedback_accuracy_param:.2f})")
    if args.out:
        print(f"wrote {Path(args.out) / 'sessions.jsonl'}, scores.csv, summary.json")
    return EXIT_OK


def _load_inputs(input_path: Path):
    if not input_path.exists():
        raise DataError(f"input {input_path} does not exist")
    files: list[Path] = []
    scores = None
    if input_path.is_dir():
        files = sorted(input_path.glob("*.jsonl"))
        candidate = input_path / "scores.csv"
        if candidate.exists():
            scores = candidate
    else:
        files = [input_path]
    if not files:
        raise DataError(f"no data: {input_path} contains no .jsonl session logs")
    logs = []
    for f in files:
        logs.extend(read_session_logs(f))
    if not logs:
        raise DataError(f"no data: {input_path} contains no session records")
    digest_files = files + ([scores] if scores else [])
    return logs, scores, input_digest(digest_files)


def cmd_analyze(args: argparse.Namespace) -> int:
    input_path = Path(args.input)
    try:
        logs, scores_path, digest = _load_inputs(input_path)
        if args.scores:
            scores_path = Path(args.scores)
        gain_records = read_scores_csv(scores_path) if scores_path else gains_from_logs(logs)
        meta = {"seed": args.seed, "input_digest": digest, "input": str(input_path)}
        bundle = build_report(logs, gain_records, meta=meta)
    except (LogFormatError, AnalysisError, PackValidationError) as e:
        raise DataError(str(e)) from e
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(bundle.text, encoding="utf-8")
    for name, rows in bundle.tables.items():
        write_table_csv(rows, out / f"{name}.csv", meta=meta)
    write_table_csv(iterations_table(logs), out / "iterations.csv", meta=meta)
    write_table_csv(sessions_table(logs), out / "sessions.csv", meta=meta)
    print(f"report written to {out / 'report.txt'} plus {len(bundle.tables) + 2} CSV tables")
    return EXIT_OK


def cmd_export_csv(args: argparse.Namespace) -> int:
    try:
        logs, _, digest = _load_inputs(Path(args.input))
    except LogFormatError as e:
        raise DataError(str(e)) from e
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"input_digest": digest}
    write_table_csv(iterations_table(logs), out / "iterations.csv", meta=meta)
    write_table_csv(sessions_table(logs), out / "sessions.csv", meta=meta)
    print(f"wrote {out / 'iterations.csv'} and {out / 'sessions.csv'}")
    return EXIT_OK


def cmd_content_validate(args: argparse.Namespace) -> int:
    failures = 0
    for path in args.packs:
        try:
            game = load_content_pack(path)
        except PackValidationError as e:
            failures += 1
            print(f"FAIL {path}")
            for problem in e.problems:
                print(f"  {problem}")
            continue
        print(f"OK   {path} ({game.game_id}: {game.n_states} states x {game.n_actions} options)")
    if failures:
        raise DataError(f"{failures} of {len(args.packs)} packs failed validation")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hub-cli", description=__doc__)
    parser.add_argument("--version", action="version", version=f"teachhub {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    serve = sub.add_parser("serve", help="run the session hub")
    serve.add_argument("--config", help="INI config file (section [hub])")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.set_defaults(fn=cmd_serve)

    simulate = sub.add_parser("simulate", help="run simulated tutor batches")
    simulate.add_argument("--game", required=True, help="built-in game id or content pack path")
    simulate.add_argument("--accuracy", type=float, required=True, help="tutor feedback accuracy in [0,1]")
    simulate.add_argument("--sessions", type=int, required=True)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--alpha", type=float, default=0.3)
    simulate.add_argument("--condition", choices=[c.value for c in Condition],
                          default=Condition.LEARNING_BY_TEACHING.value)
    simulate.add_argument("--hint-probability", type=float, default=0.15)
    simulate.add_argument("--non-response-probability", type=float, default=0.05)
    simulate.add_argument("--out", help="output directory for logs, scores and summary")
    simulate.set_defaults(fn=cmd_simulate)

    analyze = sub.add_parser("analyze", help="build the metrics/statistics report from logs")
    analyze.add_argument("--input", required=True, help="session log file or directory")
    analyze.add_argument("--scores", help="scores.csv path (default: <input>/scores.csv if present)")
    analyze.add_argument("--out", required=True, help="report output directory")
    analyze.add_argument("--seed", type=int, default=0, help="recorded in report provenance")
    analyze.set_defaults(fn=cmd_analyze)

    export = sub.add_parser("export-csv", help="flatten session logs into CSV tables")
    export.add_argument("--input", required=True)
    export.add_argument("--out", required=True)
    export.set_defaults(fn=cmd_export_csv)

    validate = sub.add_parser("content-validate", help="lint content packs")
    validate.add_argument("packs", nargs="+", help="content pack files")
    validate.set_defaults(fn=cmd_content_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, PackValidationError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

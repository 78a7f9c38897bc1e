"""``wssync`` command line.

Exit status: 0 on success, 1 when at least one view could not be
synchronized (or fuzzing found a disagreement), 2 on usage or load errors.
The knowledge-base argument may be ``@healthcare`` to use the shipped case study.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from collections.abc import Sequence

from wssync.errors import WsSyncError
from wssync.esql import print_view
from wssync.kbfile import KnowledgeBase, healthcare, load_path
from wssync.model import parse_event
from wssync.oracle import InstanceSpec, run_trials
from wssync.sync import Failed, FailedWithFallback, Rewritten, synchronize
from wssync.wsvkb import validate_view

EXIT_OK, EXIT_SYNC_FAILED, EXIT_USAGE = 0, 1, 2
BUILTIN = "@healthcare"


def _load(path: str) -> KnowledgeBase:
    return healthcare() if path == BUILTIN else load_path(path)


def _emit(args, text_lines: list[str], payload: dict) -> None:
    if args.output == "json":
        print(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def cmd_load(args) -> int:
    kb = _load(args.kb)
    counts = kb.summary()
    lines = [f"loaded {args.kb}"] + [f"  {k.replace('_', ' ')}: {v}" for k, v in counts.items()]
    _emit(args, lines, {"kb": args.kb, "counts": counts})
    return EXIT_OK


def cmd_show(args) -> int:
    kb = _load(args.kb)
    ids = [args.view_id] if args.view_id else [r.view_id for r in kb.views.records]
    texts = {vid: print_view(kb.views.view(vid)) for vid in ids}
    lines = []
    for vid in ids:
        lines += [f"-- {vid}", texts[vid], ""]
    _emit(args, lines[:-1], {"views": texts})
    return EXIT_OK


def cmd_validate(args) -> int:
    kb = _load(args.kb)
    problems = []
    try:
        kb.meta.revalidate()
    except WsSyncError as exc:
        problems.append(str(exc))
    for rec in kb.views.records:
        try:
            validate_view(rec.definition, kb.meta)
        except WsSyncError as exc:
            problems.append(f"{rec.view_id}: {exc}")
    warnings = [
        f"{ws}: views use sources not declared by the web service: {', '.join(srcs)}"
        for ws, srcs in sorted(kb.views.source_mismatches().items())
    ]
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    lines = [f"invalid: {p}" for p in problems] or [f"{args.kb}: valid"]
    _emit(args, lines, {"kb": args.kb, "valid": not problems, "problems": problems, "warnings": warnings})
    return EXIT_USAGE if problems else EXIT_OK


def render_report(report) -> list[str]:
    lines = [f"event: {report.event}"]
    for view_id in sorted(report.per_view):
        outcome = report.per_view[view_id]
        if isinstance(outcome, Rewritten):
            lines.append(f"{view_id}: rewritten, extent {outcome.extent.symbol}")
            lines += [f"  dropped {d}" for d in outcome.dropped]
            lines.append(print_view(outcome.new))
        elif isinstance(outcome, Failed):
            lines.append(f"{view_id}: failed")
            lines.append(outcome.message)
        else:
            lines.append(f"{view_id}: unchanged")
    for ws_id in sorted(report.per_ws):
        status = report.per_ws[ws_id]
        if isinstance(status, FailedWithFallback):
            lines.append(f"{ws_id}: failed, fallback {status.chosen or 'none'}")
        else:
            lines.append(f"{ws_id}: synchronized, extent {status.symbol}")
    if not report.per_view:
        lines.append("no view references the deleted component")
    return lines


def cmd_sync(args) -> int:
    kb = _load(args.kb)
    report = synchronize(kb.meta, kb.views, args.event)
    _emit(args, render_report(report), report.to_dict())
    return EXIT_SYNC_FAILED if report.failed else EXIT_OK


def cmd_fuzz(args) -> int:
    started = time.perf_counter()
    summary = run_trials(args.trials, args.seed, InstanceSpec())
    elapsed = time.perf_counter() - started
    lines = [f"{summary.agreed}/{summary.trials} agree"]
    if summary.ve_violations:
        lines.append(f"VE violations: {summary.ve_violations}")
    if summary.first_disagreement is not None:
        bad = summary.first_disagreement
        lines.append(f"first disagreement: seed {bad.seed}")
        lines += [f"  {p}" for p in bad.problems]
    if args.verbose:
        lines.append(f"rewritten {summary.rewritten}, failed {summary.failed}, {elapsed:.2f}s")
    payload = {
        "trials": summary.trials,
        "agreed": summary.agreed,
        "ve_violations": summary.ve_violations,
        "rewritten": summary.rewritten,
        "failed": summary.failed,
        "first_disagreement": None if summary.first_disagreement is None else summary.first_disagreement.seed,
    }
    _emit(args, lines, payload)
    return EXIT_OK if summary.ok else EXIT_SYNC_FAILED


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=["text", "json"], default=argparse.SUPPRESS, help="report format")

    parser = argparse.ArgumentParser(prog="wssync", description="Synchronize E-SQL views after source schema changes.")
    parser.add_argument("--output", choices=["text", "json"], default="text", help="report format (default text)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("load", parents=[common], help="load a knowledge base and print its size")
    p.add_argument("kb")
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("sync", parents=[common], help="apply a deletion and rewrite affected views")
    p.add_argument("kb")
    p.add_argument("event", nargs="+", help="delete-attribute S.R.A | delete-relation S.R")
    p.set_defaults(func=cmd_sync)

    p = sub.add_parser("show", parents=[common], help="print views in canonical E-SQL")
    p.add_argument("kb")
    p.add_argument("view_id", nargs="?")
    p.set_defaults(func=cmd_show)

    p = sub.add_parser("validate", parents=[common], help="check a knowledge base for consistency")
    p.add_argument("kb")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fuzz", parents=[common], help="compare the engine against the brute-force oracle")
    p.add_argument("--trials", type=_positive, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_fuzz)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sync":
        try:
            args.event = parse_event(" ".join(args.event))
        except ValueError as exc:
            print(f"wssync: {exc}", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except WsSyncError as exc:
        print(f"wssync: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

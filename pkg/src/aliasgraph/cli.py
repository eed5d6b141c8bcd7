"""Command-line driver.

Two commands: `analyze` runs one program and renders its reports,
`corpus` checks a directory of programs against frozen expectations.

Exit status: 0 clean, 1 analysis reported errors (or expectations
failed), 2 unusable input (parse/static errors, bad entry, bad paths).
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from typing import List, Optional

from aliasgraph.calculus import AnalysisConfig, AnalysisError, Engine
from aliasgraph.lang import ParseError, parse_file, resolve
from aliasgraph.query import (
    AliasQuery,
    QueryError,
    build_report,
    deutsch_report,
    emit_dot,
    emit_json,
    query_alias,
)


@dataclass
class RunConfig:
    inputs: List[str]
    entry: str = "main"
    cap: int = 1
    max_iters: int = 1000
    max_path_len: int = 6
    points: bool = False
    at: Optional[str] = None
    queries: List[str] = field(default_factory=list)
    deutsch: bool = False
    json_path: Optional[str] = None
    dot_path: Optional[str] = None


def _color_on():
    env = os.environ.get("ALIASGRAPH_COLOR")
    if env == "1":
        return True
    if env == "0":
        return False
    return sys.stderr.isatty()


def _paint(text, code):
    if _color_on():
        return "\x1b[%sm%s\x1b[0m" % (code, text)
    return text


_SEVERITY_COLORS = {"error": "31", "warning": "33", "note": "36"}


def _print_diagnostics(diags):
    for d in diags:
        print(_paint(d.render(), _SEVERITY_COLORS.get(d.severity, "0")), file=sys.stderr)


def _load(path, config):
    """Parse, resolve, analyze. Returns (engine, exit_code)."""
    try:
        program = parse_file(path)
    except OSError as exc:
        print(_paint("cannot read %s: %s" % (path, exc), "31"), file=sys.stderr)
        return None, 2
    except ParseError as exc:
        print(_paint(exc.diagnostic.render(), "31"), file=sys.stderr)
        return None, 2
    static = resolve(program)
    _print_diagnostics(static)
    if any(d.severity == "error" for d in static):
        return None, 2
    engine = Engine(
        program,
        AnalysisConfig(
            cap=config.cap,
            max_iters=config.max_iters,
            max_path_len=config.max_path_len,
            record_points=bool(config.points or config.at or config.deutsch),
        ),
    )
    try:
        engine.analyze(config.entry)
    except AnalysisError as exc:
        print(_paint(str(exc), "31"), file=sys.stderr)
        return None, 2
    return engine, 0


def run(config) -> int:
    """The `analyze` command."""
    engine, rc = _load(config.inputs[0], config)
    if rc:
        return rc
    report = build_report(engine)
    # keep stdout clean for piping when a machine report claims it
    out = sys.stderr if "-" in (config.json_path, config.dot_path) else sys.stdout

    if config.deutsch:
        try:
            props = deutsch_report(engine, k=3)
        except QueryError as exc:
            print(_paint(str(exc), "31"), file=sys.stderr)
            return 1
        for name in ("P1", "P2", "P3", "P4", "P5"):
            line = "%s: %s" % (name, "yes" if props[name] else "no")
            print(line, file=out)
            report.diagnostics.append("deutsch %s (k=%d)" % (line, props["k"]))
        share = "no-share root component: %s" % ("yes" if props["no_share_root"] else "no")
        print(share, file=out)
        report.diagnostics.append("deutsch " + share)

    print("entry: %s" % report.entry, file=out)
    shown = report.final_pairs
    where = "final"
    if config.at is not None:
        by_label = dict(report.points)
        if config.at not in by_label:
            print(_paint("unknown program point %r" % config.at, "31"), file=sys.stderr)
            return 1
        shown = by_label[config.at]
        where = "at %s" % config.at
    print("alias pairs (%s):" % where, file=out)
    for p, q in shown:
        print("  %s ~ %s" % (p, q), file=out)

    for qtext in config.queries:
        try:
            answers = query_alias(engine, AliasQuery(qtext, at=config.at))
        except QueryError as exc:
            print(_paint(str(exc), "31"), file=sys.stderr)
            return 1
        print("alias(%s) = {%s}" % (qtext, ", ".join(sorted(answers))), file=out)

    if config.json_path:
        _write(config.json_path, emit_json(report))
    if config.dot_path:
        if config.at is not None:
            diagram, scope = engine.snapshots[config.at]
        else:
            diagram, scope = engine.diagram, engine.report_scope()
        _write(config.dot_path, emit_dot(diagram, scope))

    _print_diagnostics(engine.diagnostics)
    return 1 if engine.has_errors() else 0


def _write(path, blob):
    if path == "-":
        sys.stdout.write(blob.decode("utf-8"))
    else:
        with open(path, "wb") as fh:
            fh.write(blob)


def _pairs_as_sets(doc):
    """label -> set of pair tuples, with 'final' as its own label."""
    out = {}
    for point in doc.get("points", []):
        out[point["label"]] = {tuple(p) for p in point.get("pairs", [])}
    out["final"] = {tuple(p) for p in doc.get("final", {}).get("pairs", [])}
    return out


def run_corpus(config) -> int:
    """The `corpus` command: .oo files vs adjacent .expected.json."""
    root = config.inputs[0]
    if not os.path.isdir(root):
        print(_paint("not a directory: %s" % root, "31"), file=sys.stderr)
        return 2
    files = sorted(f for f in os.listdir(root) if f.endswith(".oo"))
    passed = failed = skipped = 0
    for name in files:
        oo_path = os.path.join(root, name)
        want_path = os.path.join(root, name[:-3] + ".expected.json")
        if not os.path.exists(want_path):
            print("SKIP %s (no expectation file)" % name)
            skipped += 1
            continue
        with open(want_path, "r", encoding="utf-8") as fh:
            want_doc = json.load(fh)
        file_config = RunConfig(
            inputs=[oo_path],
            entry=want_doc.get("entry", config.entry),
            cap=config.cap,
            max_iters=config.max_iters,
            max_path_len=config.max_path_len,
            points=True,
        )
        engine, rc = _load(oo_path, file_config)
        if rc:
            print(_paint("FAIL %s (did not analyze)" % name, "31"))
            failed += 1
            continue
        got = _pairs_as_sets(build_report(engine).to_dict())
        want = _pairs_as_sets(want_doc)
        diffs = []
        for label in sorted(set(got) | set(want)):
            missing = want.get(label, set()) - got.get(label, set())
            extra = got.get(label, set()) - want.get(label, set())
            for p, q in sorted(missing):
                diffs.append("%s: missing %s ~ %s" % (label, p, q))
            for p, q in sorted(extra):
                diffs.append("%s: unexpected %s ~ %s" % (label, p, q))
        if diffs:
            print(_paint("FAIL %s" % name, "31"))
            for d in diffs:
                print("  " + d)
            failed += 1
        else:
            print(_paint("PASS %s" % name, "32"))
            passed += 1
    print("%d passed, %d failed, %d skipped" % (passed, failed, skipped))
    return 1 if failed else 0


def _build_parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--entry", default="main", metavar="NAME",
                        help="entry routine: Class.routine or a top-level name (default: main)")
    shared.add_argument("--cap", type=int, default=1, metavar="N",
                        help="creation allowance per site inside a fixpoint (default: 1)")
    shared.add_argument("--max-iters", type=int, default=1000, metavar="N",
                        help="fixpoint iteration ceiling (default: 1000)")
    shared.add_argument("--max-path-len", type=int, default=6, metavar="N",
                        help="depth bound for query path enumeration (default: 6)")

    parser = argparse.ArgumentParser(
        prog="aliasgraph",
        description="May-alias analysis for the mini object-oriented language.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", parents=[shared], help="analyze one program")
    pa.add_argument("file", help="the .oo program")
    pa.add_argument("--points", action="store_true", help="record per-point snapshots")
    pa.add_argument("--at", metavar="L", help="report pairs at this program point")
    pa.add_argument("--query", action="append", default=[], metavar="PATH",
                    help="print the alias set of PATH (repeatable)")
    pa.add_argument("--deutsch", action="store_true",
                    help="check the list-copy properties P1..P5 (expects X/Y/hd/tl, points L2/L3)")
    pa.add_argument("--json", metavar="FILE", help="write the JSON report ('-' for stdout)")
    pa.add_argument("--dot", metavar="FILE", help="write a DOT drawing ('-' for stdout)")

    pc = sub.add_parser("corpus", parents=[shared],
                        help="run every .oo under DIR against its .expected.json")
    pc.add_argument("dir")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.cap < 1 or args.max_iters < 1:
        print("cap and iteration ceiling must be at least 1", file=sys.stderr)
        return 2
    if args.command == "analyze":
        config = RunConfig(
            inputs=[args.file],
            entry=args.entry,
            cap=args.cap,
            max_iters=args.max_iters,
            max_path_len=args.max_path_len,
            points=args.points,
            at=args.at,
            queries=args.query,
            deutsch=args.deutsch,
            json_path=args.json,
            dot_path=args.dot,
        )
        return run(config)
    config = RunConfig(
        inputs=[args.dir],
        entry=args.entry,
        cap=args.cap,
        max_iters=args.max_iters,
        max_path_len=args.max_path_len,
    )
    return run_corpus(config)


if __name__ == "__main__":
    sys.exit(main())

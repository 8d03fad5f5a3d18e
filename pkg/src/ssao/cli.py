"""``ssao`` command line: validate, reason, query, ingest and export."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Sequence, TextIO

from .catalog import IngestConfig, ingest_tle_text, render_ingest
from .dsl import load_files, serialize
from .model import KnowledgeBase, ModelError
from .query import InstancesOf, QuerySyntaxError, answer, parse_ask, parse_pattern
from .reasoner import (
    INFER,
    VALIDATE,
    IterationBoundExceeded,
    ReasonerConfig,
    check,
    export_asserted,
    export_closure,
    materialize,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

SEED_ENV = "SSAO_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # one line, no usage dump, reported by run()
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--domain-range",
        choices=(INFER, VALIDATE),
        default=argparse.SUPPRESS,
        help="treat relation domain/range as inference rules or as checks (default validate)",
    )
    parser = _Parser(prog="ssao", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="parse, materialize and report violations")
    p.add_argument("files", nargs="*", metavar="FILE")

    p = sub.add_parser("reason", parents=[common], help="write the materialized closure")
    p.add_argument("files", nargs="*", metavar="FILE")
    p.add_argument("--out", default="-", metavar="PATH")

    p = sub.add_parser("query", parents=[common], help="answer one query over the closure")
    p.add_argument("files", nargs="*", metavar="FILE")
    form = p.add_mutually_exclusive_group(required=True)
    form.add_argument("--ask", metavar="ATOM")
    form.add_argument("--instances-of", metavar="NAME")
    form.add_argument("--match", metavar="PATTERN")
    p.add_argument("--direct", action="store_true", help="with --instances-of: most specific classes only")
    p.add_argument("--expect-nonempty", action="store_true", help="exit 1 on false or no rows")

    p = sub.add_parser("ingest", parents=[common], help="annotate a TLE file as .ssao facts")
    p.add_argument("tlefile", metavar="TLEFILE")
    p.add_argument("--ontology", nargs="+", default=[], metavar="FILE")
    p.add_argument("--sensor", metavar="NAME")
    p.add_argument("--out", default="-", metavar="PATH")

    p = sub.add_parser("export", parents=[common], help="canonical serialization")
    p.add_argument("files", nargs="*", metavar="FILE")
    p.add_argument("--format", choices=("ssao", "triples"), default="ssao")
    return parser


def _with_seed(files: Sequence[str]) -> list[str]:
    seed = os.environ.get(SEED_ENV)
    files = list(files)
    if seed:
        given = {Path(f).resolve() for f in files}
        if Path(seed).resolve() not in given:
            files.insert(0, seed)
    if not files:
        raise UsageError(f"no input files (pass FILE arguments or set {SEED_ENV})")
    return files


def _load(files: Sequence[str], err: TextIO) -> KnowledgeBase | None:
    kb, diags = load_files(_with_seed(files))
    for d in diags:
        print(d, file=err)
    if any(d.severity == "error" for d in diags):
        return None
    return kb


def _write(text: str, dest: str, out: TextIO) -> None:
    if dest == "-":
        out.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")


def _run(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    cfg = ReasonerConfig(domain_range_mode=getattr(args, "domain_range", VALIDATE))

    if args.command == "ingest":
        kb = _load(args.ontology, err)
        if kb is None:
            return EXIT_USAGE
        try:
            text = Path(args.tlefile).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            print(f"{args.tlefile}:0: error: E_IO: {exc}", file=err)
            return EXIT_USAGE
        report = ingest_tle_text(kb, text, IngestConfig(tracked_by_sensor=args.sensor), args.tlefile)
        for d in report.diagnostics:
            print(d, file=err)
        err.write(report.to_text())
        _write(render_ingest(kb, report), args.out, out)
        return EXIT_OK

    if args.command == "query" and args.direct and args.instances_of is None:
        raise UsageError("--direct only applies to --instances-of")

    kb = _load(args.files, err)
    if kb is None:
        return EXIT_USAGE

    if args.command == "export":
        _write(serialize(kb) if args.format == "ssao" else export_asserted(kb), "-", out)
        return EXIT_OK

    closure = materialize(kb, cfg)
    if args.command == "validate":
        violations = check(kb, closure, cfg)
        for v in violations:
            print(v, file=out)
        print(
            f"{len(kb.facts)} asserted, {len(closure.inferred_facts)} inferred, "
            f"{len(violations)} violation(s)",
            file=err,
        )
        return EXIT_FAILED if violations else EXIT_OK

    if args.command == "reason":
        _write(export_closure(closure), args.out, out)
        return EXIT_OK

    if args.ask is not None:
        query = parse_ask(args.ask)
    elif args.match is not None:
        query = parse_pattern(args.match)
    else:
        query = InstancesOf(args.instances_of, args.direct)
    lines = answer(closure, query)
    for line in lines:
        print(line, file=out)
    empty = not lines or lines == ["false"]
    return EXIT_FAILED if args.expect_nonempty and empty else EXIT_OK


def run(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"ssao: error: {exc}", file=err)
        return EXIT_USAGE
    try:
        return _run(args, out, err)
    except ModelError as exc:
        print(f"ssao: error: {exc.code}: {exc}", file=err)
    except (UsageError, QuerySyntaxError, IterationBoundExceeded, OSError) as exc:
        print(f"ssao: error: {exc}", file=err)
    return EXIT_USAGE


def main() -> None:
    sys.exit(run())

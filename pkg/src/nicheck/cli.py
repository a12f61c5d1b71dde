"""Command-line front end."""

from __future__ import annotations

import argparse
import sys

from .lang import NicheckError, ParseError, Program, parse_program
from .report import Report, SemanticReport, analysis_report
from .semantics import (DEFAULT_CAP, CapExceeded, RelationTooLarge, SecBisimMode,
                        StateSpace, check_lts, explore)
from .typesys import SystemId, analyze
from .validate import SOUND_MODE, validate

EXIT_OK, EXIT_REJECT, EXIT_ERROR, EXIT_CAP = 0, 1, 2, 3

# Strictest first: the default semantic mode follows the first system that accepts.
STRICTNESS = (SystemId.VS2, SystemId.VS1, SystemId.BC, SystemId.MB)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {value}")
    return value


def _modulus(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"modulus must be >= 2: {value}")
    return value


def _count(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nicheck", description="Security type systems and noninterference checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="type-check a program under the four systems")
    a.add_argument("file")
    a.add_argument("--system", default="all", choices=[s.value for s in SystemId] + ["all"])
    a.add_argument("--format", default="text", choices=("text", "json"))

    s = sub.add_parser("semantic", help="decide security bisimilarity on the configuration graph")
    s.add_argument("file")
    s.add_argument("--mode", choices=[m.value for m in SecBisimMode])
    s.add_argument("--modulus", type=_modulus, default=2)
    s.add_argument("--cap", type=_positive, default=DEFAULT_CAP)
    s.add_argument("--format", default="text", choices=("text", "json"))

    v = sub.add_parser("validate", help="run the validation suites over the command corpus")
    v.add_argument("--max-size", type=_positive, default=4)
    v.add_argument("--modulus", type=_modulus, default=2)
    v.add_argument("--random", type=_count, default=1000)
    v.add_argument("--seed", type=int, default=0)
    return p


def _load(path: str) -> Program:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _Fail(f"{path}: {exc.strerror}") from None
    try:
        return parse_program(text)
    except ParseError as exc:
        raise _Fail(f"{path}:{exc}") from None
    except NicheckError as exc:
        raise _Fail(f"{path}: {exc}") from None


class _Fail(Exception):
    pass


def _emit(report: Report, fmt: str) -> None:
    print(report.dumps() if fmt == "json" else report.render())


def cmd_analyze(args) -> int:
    prog = _load(args.file)
    systems = list(SystemId) if args.system == "all" else [SystemId.parse(args.system)]
    info = analyze(prog.body, prog.sec_env)
    report = analysis_report(prog, info, systems)
    _emit(report, args.format)
    return EXIT_OK if report.accepted else EXIT_REJECT


def default_mode(info) -> SecBisimMode:
    for system in STRICTNESS:
        if info.safe(system):
            return SOUND_MODE[system]
    return SecBisimMode.WEAK


def cmd_semantic(args) -> int:
    prog = _load(args.file)
    info = analyze(prog.body, prog.sec_env)
    mode = SecBisimMode(args.mode) if args.mode else default_mode(info)
    lts = explore(StateSpace(prog.sec_env, args.modulus), prog.body, args.cap)
    verdict = check_lts(lts, mode)
    report = analysis_report(prog, info, list(SystemId))
    report = Report(report.program, report.systems, SemanticReport.of(verdict))
    _emit(report, args.format)
    return EXIT_OK if verdict.secure else EXIT_REJECT


def cmd_validate(args) -> int:
    summary = validate(args.max_size, args.modulus, args.random, args.seed)
    print(summary.render())
    return EXIT_OK if summary.ok else EXIT_REJECT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"analyze": cmd_analyze, "semantic": cmd_semantic,
               "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except _Fail as exc:
        print(f"nicheck: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except CapExceeded as exc:
        print(f"nicheck: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (RelationTooLarge, NicheckError, ValueError) as exc:
        print(f"nicheck: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

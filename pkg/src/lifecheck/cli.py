"""Command-line driver.

    lifecheck analyze FILE... [--type-facts F] [--format text|json] [--warnings]
    lifecheck run FILE [--trace] [--max-steps N]
    lifecheck fuzz [--count N] [--seed S] [--feature-mask heap,loops]
    lifecheck corpus DIR

Exit status: 0 clean, 1 errors found (or a failing run / missed oracle
error / corpus mismatch), 2 unreadable input, parse or configuration
failure, 3 when ``run`` exhausts its step budget.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .analysis.solver import ORDERS, AnalysisError
from .corpus import CorpusError, run_corpus
from .diagnostics import render_json, render_text
from .frontend.lexer import ParseError
from .frontend.parser import parse_program
from .frontend.validate import validate_program
from .gen import parse_feature_mask
from .interp import DEFAULT_MAX_STEPS, ErrorConfig, LimitExceeded, run
from .oracle import fuzz
from .pipeline import Options, analyze_program, dump_cfgs, dump_pmaps
from .typeclass import FactsError, TypeEnv, check_facts, load_facts

EXIT_OK, EXIT_FOUND, EXIT_FAILURE, EXIT_LIMIT = 0, 1, 2, 3


def _use_color(stream) -> bool:
    env = os.environ.get("LIFECHECK_COLOR")
    if env is not None:
        return env == "1"
    return stream.isatty()


def _load_facts(path):
    if path is None:
        return None
    facts = load_facts(path)
    check_facts(facts)
    return facts


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _fail(msg: str) -> int:
    print(f"lifecheck: {msg}", file=sys.stderr)
    return EXIT_FAILURE


def cmd_analyze(args) -> int:
    try:
        facts = _load_facts(args.type_facts)
    except (FactsError, OSError) as exc:
        return _fail(f"{args.type_facts}: {exc}")
    options = Options(warnings=args.warnings, certain_only=args.certain_only,
                      strict_calls=args.strict_calls, order=args.order)
    color = _use_color(sys.stdout)
    status = EXIT_OK
    for path in args.files:
        try:
            program = parse_program(_read(path), path)
            analysis = analyze_program(program, facts, options, path)
        except OSError as exc:
            status = max(status, _fail(f"{path}: {exc.strerror or exc}"))
            continue
        except UnicodeDecodeError:
            status = max(status, _fail(f"{path}: input is not UTF-8"))
            continue
        except ParseError as exc:
            print(exc, file=sys.stderr)
            status = EXIT_FAILURE
            continue
        except AnalysisError as exc:
            status = max(status, _fail(str(exc)))
            continue
        if args.dump_cfg and not analysis.frontend_failed:
            print(dump_cfgs(analysis))
        if args.dump_pmaps and not analysis.frontend_failed:
            print(dump_pmaps(analysis))
        for d in analysis.diagnostics:
            print(render_json(d) if args.format == "json" else render_text(d, color))
        if analysis.frontend_failed:
            status = EXIT_FAILURE
        elif analysis.has_errors:
            status = max(status, EXIT_FOUND)
    return status


def cmd_run(args) -> int:
    try:
        facts = _load_facts(args.type_facts)
        program = parse_program(_read(args.file), args.file)
    except (FactsError, OSError, UnicodeDecodeError) as exc:
        return _fail(f"{args.file}: {exc}")
    except ParseError as exc:
        print(exc, file=sys.stderr)
        return EXIT_FAILURE
    env = TypeEnv(facts)
    front = validate_program(program, env)
    if front:
        for d in front:
            print(render_text(d), file=sys.stderr)
        return EXIT_FAILURE
    trace = print if args.trace else None
    outcome = run(program, args.entry, args.max_steps, env, trace=trace)
    if isinstance(outcome, ErrorConfig):
        print(outcome)
        for loc in reversed(outcome.stack):
            print(f"{loc}: note: called from here")
        return EXIT_FOUND
    if isinstance(outcome, LimitExceeded):
        print(f"stopped after {outcome.steps} steps: {outcome.reason}")
        return EXIT_LIMIT
    st = outcome.state
    value = "" if outcome.value is None else f" returning {outcome.value!r}"
    print(f"terminated{value}: {len(st.memory)} live cells, {len(st.blocks)} live blocks")
    return EXIT_OK


def cmd_fuzz(args) -> int:
    try:
        features = parse_feature_mask(args.feature_mask)
    except ValueError as exc:
        return _fail(str(exc))
    report = fuzz(args.count, args.seed, features, args.max_statements)
    if args.format == "json":
        print(json.dumps({
            "programs": report.programs, "paths": report.paths,
            "concrete_errors": report.concrete_errors, "missed": len(report.missed),
            "static_positive": report.static_positive, "static_only": report.static_only,
            "fp_rate": report.fp_rate, "seconds": round(report.seconds, 3),
        }, sort_keys=True))
    else:
        print(report.render())
    return EXIT_FOUND if report.missed else EXIT_OK


def cmd_corpus(args) -> int:
    try:
        facts = _load_facts(args.type_facts)
        report = run_corpus(args.directory, facts, Options(strict_calls=args.strict_calls))
    except (FactsError, OSError) as exc:
        return _fail(str(exc))
    except CorpusError as exc:
        return _fail(str(exc))
    print(report.render())
    return EXIT_OK if report.ok else EXIT_FOUND


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lifecheck", description="Lifetime checker for .lt programs.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log internal progress")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="report lifetime errors")
    a.add_argument("files", nargs="+")
    a.add_argument("--type-facts", metavar="FILE")
    a.add_argument("--format", choices=("text", "json"), default="text")
    a.add_argument("--warnings", action="store_true", help="also report W-codes")
    a.add_argument("--certain-only", action="store_true",
                   help="report only uses whose pset is exactly {invalid}")
    a.add_argument("--strict-calls", action="store_true", help="calls to unknown functions are errors")
    a.add_argument("--dump-cfg", action="store_true", help="print each function's CFG as DOT")
    a.add_argument("--dump-pmaps", action="store_true", help="print the input pmap of every node")
    a.add_argument("--order", choices=ORDERS, default="fifo", help="worklist order")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("run", help="execute a program concretely")
    r.add_argument("file")
    r.add_argument("--entry", default="main")
    r.add_argument("--type-facts", metavar="FILE")
    r.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    r.add_argument("--trace", action="store_true", help="print every executed statement")
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("fuzz", help="compare the checker with the interpreter on random programs")
    f.add_argument("--count", type=int, default=500)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--feature-mask", default="all", help="all, none, or a list from moves,heap,calls,loops")
    f.add_argument("--max-statements", type=int, default=14)
    f.add_argument("--format", choices=("text", "json"), default="text")
    f.set_defaults(func=cmd_fuzz)

    c = sub.add_parser("corpus", help="run an expected-diagnostic corpus")
    c.add_argument("directory")
    c.add_argument("--type-facts", metavar="FILE")
    c.add_argument("--strict-calls", action="store_true")
    c.set_defaults(func=cmd_corpus)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

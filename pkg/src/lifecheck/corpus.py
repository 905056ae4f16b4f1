"""Expected-diagnostic corpus runner.

Each ``.lt`` file states what the analyzer should report with
``// expect-error@+N: CODE`` comments; ``// known-fp@+N: CODE cause`` marks
a report that is known to be spurious. Diagnostics are matched to
expectations by (line, code). Every judgement is one of:

* TP: an expected error was reported
* FN: an expected error was not reported
* FP: an error was reported where none was expected (documented when a
  ``known-fp`` comment covers it)
* TN: a ``known-fp`` site stayed quiet, or a file with no expectations
  produced no errors at all

A ``types.json`` facts file in the corpus root or in a style directory
applies to every file below it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .frontend.lexer import ParseError
from .frontend.parser import parse_program
from .pipeline import Options, analyze_program
from .typeclass import FactsError, load_facts

STYLES = ("advanced", "regular", "basic")
FACTS_FILE = "types.json"


class CorpusError(Exception):
    """The corpus itself is broken: unreadable file, bad trivia or bad facts."""


@dataclass
class FileResult:
    path: str
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    documented_fp: int = 0
    problems: list[str] = field(default_factory=list)  # FN and undocumented FP sites


@dataclass
class CorpusMetrics:
    style: str
    files: int = 0
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    documented_fp: int = 0

    @property
    def judgements(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.judgements if self.judgements else 1.0

    def add(self, r: FileResult) -> None:
        self.files += 1
        self.tp += r.tp
        self.fp += r.fp
        self.fn += r.fn
        self.tn += r.tn
        self.documented_fp += r.documented_fp


@dataclass
class CorpusReport:
    rows: list[CorpusMetrics]
    total: CorpusMetrics
    files: list[FileResult]

    @property
    def ok(self) -> bool:
        """No missed error and no spurious report that the corpus does not document."""
        return all(not f.problems for f in self.files)

    def row(self, style: str) -> Optional[CorpusMetrics]:
        for r in self.rows:
            if r.style == style:
                return r
        return None

    def render(self) -> str:
        head = f"{'Code style':<10} {'Files':>5} {'Judged':>6} {'TP':>4} {'TN':>4} {'FN':>4} {'FP':>4} {'(known)':>7} {'Accuracy':>9}"
        lines = [head, "-" * len(head)]
        for m in [*self.rows, self.total]:
            lines.append(
                f"{m.style.capitalize():<10} {m.files:>5} {m.judgements:>6} {m.tp:>4} {m.tn:>4} "
                f"{m.fn:>4} {m.fp:>4} {m.documented_fp:>7} {m.accuracy:>8.2%}"
            )
        for f in self.files:
            for p in f.problems:
                lines.append(f"{f.path}: {p}")
        return "\n".join(lines)


def _facts_for(path: Path, root: Path, cache: dict):
    facts = {}
    for d in (root, path.parent):
        fp = d / FACTS_FILE
        if fp.is_file():
            if fp not in cache:
                try:
                    cache[fp] = load_facts(fp)
                except (FactsError, OSError) as exc:
                    raise CorpusError(f"{fp}: {exc}") from None
            facts = {**facts, **cache[fp]}
    return facts


def judge_file(path: Path, facts=None, options: Options | None = None, name: str | None = None) -> FileResult:
    name = name or str(path)
    try:
        source = path.read_text(encoding="utf-8")
        program = parse_program(source, name)
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"{name}: {exc}") from None
    except ParseError as exc:
        raise CorpusError(str(exc)) from None
    if program.bad_trivia:
        loc, text = program.bad_trivia[0]
        raise CorpusError(f"{loc}: malformed expectation comment: {text!r}")
    analysis = analyze_program(program, facts, options, name)
    reported = {(d.loc.line, d.code) for d in analysis.diagnostics if d.is_error}
    expected = {(e.line, e.code) for e in program.expectations if e.kind == "expect-error"}
    known = {(e.line, e.code) for e in program.expectations if e.kind == "known-fp"}
    r = FileResult(name)
    for site in sorted(expected):
        if site in reported:
            r.tp += 1
        else:
            r.fn += 1
            r.problems.append(f"line {site[0]}: expected {site[1]}, not reported")
    for site in sorted(known - expected):
        if site in reported:
            r.fp += 1
            r.documented_fp += 1
        else:
            r.tn += 1
    for site in sorted(reported - expected - known):
        r.fp += 1
        r.problems.append(f"line {site[0]}: unexpected {site[1]}")
    if not expected and not known and not reported:
        r.tn += 1
    return r


def run_corpus(directory, facts=None, options: Options | None = None) -> CorpusReport:
    """Judge every ``.lt`` file below ``directory``, one row per style subdirectory."""
    root = Path(directory)
    if not root.is_dir():
        raise CorpusError(f"{root}: not a directory")
    cache: dict = {}
    styles = [s for s in STYLES if (root / s).is_dir()]
    extra = sorted(p.name for p in root.iterdir() if p.is_dir() and p.name not in STYLES)
    groups = [(s, root / s) for s in styles + extra]
    if not groups:
        groups = [(root.name or "corpus", root)]
    rows, results = [], []
    total = CorpusMetrics("total")
    for style, d in groups:
        m = CorpusMetrics(style)
        for path in sorted(d.rglob("*.lt")):
            file_facts = {**_facts_for(path, root, cache), **(facts or {})}
            r = judge_file(path, file_facts, options, str(path))
            m.add(r)
            total.add(r)
            results.append(r)
        rows.append(m)
    return CorpusReport(rows, total, results)

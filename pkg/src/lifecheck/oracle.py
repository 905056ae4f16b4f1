"""Differential soundness check: static diagnostics versus concrete runs.

Every generated program is analyzed and then executed along every branch
resolution. A concrete memory error is *covered* when some static error
(E001, E002, E004 or E005) sits on the failing statement's line, the
failing expression's line, or the line of a call on the active call stack.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .gen import FEATURES, GenConfig, generate_source
from .interp import ErrorConfig, LimitExceeded, enumerate_paths, prepare
from .frontend.parser import parse_program
from .pipeline import analyze_program

log = logging.getLogger(__name__)

COVERING_CODES = frozenset({"E001", "E002", "E004", "E005"})


@dataclass
class Miss:
    seed: int
    error: ErrorConfig
    source: str


@dataclass
class FuzzReport:
    programs: int = 0
    paths: int = 0
    incomplete: int = 0
    limit_exceeded: int = 0
    concrete_errors: int = 0
    other_errors: int = 0
    missed: list[Miss] = field(default_factory=list)
    static_positive: int = 0  # programs with at least one static error
    static_only: int = 0  # ... of which no path fails concretely
    diagnostics: int = 0
    unconfirmed_diagnostics: int = 0  # no concrete error on that line
    seconds: float = 0.0

    @property
    def fp_rate(self) -> float:
        return self.static_only / self.static_positive if self.static_positive else 0.0

    @property
    def diagnostic_fp_rate(self) -> float:
        return self.unconfirmed_diagnostics / self.diagnostics if self.diagnostics else 0.0

    def render(self) -> str:
        lines = [
            f"programs generated:        {self.programs}",
            f"paths enumerated:          {self.paths}",
            f"incomplete path sets:      {self.incomplete}",
            f"paths over step budget:    {self.limit_exceeded}",
            f"concrete memory errors:    {self.concrete_errors}",
            f"other runtime errors:      {self.other_errors}",
            f"missed by static analysis: {len(self.missed)}",
            f"static-positive programs:  {self.static_positive}",
            f"  with no concrete error:  {self.static_only} ({self.fp_rate:.1%})",
            f"static errors reported:    {self.diagnostics}",
            f"  unconfirmed by any path: {self.unconfirmed_diagnostics} ({self.diagnostic_fp_rate:.1%})",
            f"time:                      {self.seconds:.2f}s",
        ]
        for m in self.missed[:5]:
            lines += ["", f"MISSED (seed {m.seed}): {m.error}", m.source]
        return "\n".join(lines)


def check_program(source: str, seed: int, report: FuzzReport, max_branch_depth: int = 12,
                  max_loop_unrolls: int = 2) -> None:
    program = parse_program(source, f"<gen:{seed}>")
    analysis = analyze_program(program, file=f"<gen:{seed}>")
    if analysis.frontend_failed:
        raise AssertionError(f"generated program {seed} was rejected:\n{source}")
    static = [d for d in analysis.diagnostics if d.code in COVERING_CODES]
    static_lines = {d.loc.line for d in static}
    paths = enumerate_paths(prepare(program), max_branch_depth=max_branch_depth,
                            max_loop_unrolls=max_loop_unrolls, lowered=True)
    report.programs += 1
    report.paths += len(paths)
    report.incomplete += paths.incomplete
    error_lines: set[int] = set()
    seen: set[tuple] = set()
    for p in paths.paths:
        out = p.outcome
        if isinstance(out, LimitExceeded):
            report.limit_exceeded += 1
            continue
        if not isinstance(out, ErrorConfig):
            continue
        if not out.is_memory_error:
            report.other_errors += 1
            log.warning("seed %d: %s", seed, out)
            continue
        report.concrete_errors += 1
        lines = out.lines()
        error_lines |= lines
        key = (out.loc, out.kind, out.stack)
        if not (lines & static_lines) and key not in seen:
            seen.add(key)
            report.missed.append(Miss(seed, out, source))
    if static:
        report.static_positive += 1
        if not error_lines:
            report.static_only += 1
    report.diagnostics += len(static)
    report.unconfirmed_diagnostics += sum(1 for d in static if d.loc.line not in error_lines)


def fuzz(count: int = 500, seed: int = 0, features=FEATURES, max_statements: int = 14,
         max_branch_depth: int = 12, max_loop_unrolls: int = 2) -> FuzzReport:
    """Check ``count`` programs generated from seeds ``seed .. seed+count-1``."""
    report = FuzzReport()
    start = time.perf_counter()
    for k in range(count):
        cfg = GenConfig(seed=seed + k, max_statements=max_statements, features=frozenset(features))
        check_program(generate_source(cfg), cfg.seed, report, max_branch_depth, max_loop_unrolls)
    report.seconds = time.perf_counter() - start
    return report

"""parse -> validate -> lower -> build CFGs -> solve -> check, for one source file."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .analysis.solver import DataflowResult, solve
from .analysis.transfer import Context, seed_entry
from .checker import CheckOptions, check_function
from .diagnostics import Diagnostic, sort_unique
from .frontend.parser import parse_program
from .frontend.syntax import Function, Program
from .frontend.validate import validate_program
from .normalize.cfg import build_cfg, to_dot
from .normalize.instr import Cfg, format_instr
from .normalize.lower import desugar_heap, lower_scopes, reject_pointer_arith
from .typeclass import FactsSet, TypeEnv

log = logging.getLogger(__name__)


@dataclass
class Options(CheckOptions):
    order: str = "fifo"
    rng_seed: int = 0


@dataclass
class FunctionAnalysis:
    function: Function
    cfg: Cfg
    context: Context
    result: DataflowResult
    diagnostics: list[Diagnostic]


@dataclass
class Analysis:
    file: str
    program: Program
    lowered: Optional[Program] = None
    functions: list[FunctionAnalysis] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    frontend_failed: bool = False

    @property
    def has_errors(self) -> bool:
        return any(d.is_error for d in self.diagnostics)

    def function(self, name: str) -> Optional[FunctionAnalysis]:
        for f in self.functions:
            if f.function.name == name:
                return f
        return None


def lower_program(program: Program, env: TypeEnv) -> Program:
    return desugar_heap(lower_scopes(program, env))


def analyze_function(program: Program, fn: Function, env: TypeEnv,
                     options: Options | None = None) -> FunctionAnalysis:
    options = options or Options()
    cfg = build_cfg(fn, program, env)
    ctx = Context.for_cfg(program, fn, cfg, env)
    result = solve(cfg, seed_entry(fn, ctx), ctx, options.order, options.rng_seed)
    diags = check_function(fn, cfg, result, ctx, options)
    for msg in ctx.internal_errors:
        log.error("internal error in %s: %s", fn.name, msg)
    return FunctionAnalysis(fn, cfg, ctx, result, diags)


def analyze_program(program: Program, facts: FactsSet | None = None,
                    options: Options | None = None, file: str = "<input>") -> Analysis:
    options = options or Options()
    env = TypeEnv(facts)
    front = validate_program(program, env)
    if front:
        return Analysis(file, program, diagnostics=sort_unique(front), frontend_failed=True)
    diags = reject_pointer_arith(program, env)
    lowered = lower_program(program, env)
    out = Analysis(file, program, lowered)
    for fn in lowered.functions:
        if fn.body is None:
            continue
        fa = analyze_function(lowered, fn, env, options)
        out.functions.append(fa)
        diags += fa.diagnostics
    out.diagnostics = sort_unique(diags)
    return out


def analyze_source(source: str, file: str = "<input>", facts: FactsSet | None = None,
                   options: Options | None = None) -> Analysis:
    """Raises ParseError for malformed input."""
    return analyze_program(parse_program(source, file), facts, options, file)


def dump_pmaps(analysis: Analysis) -> str:
    lines = []
    for fa in analysis.functions:
        lines.append(f"function {fa.function.name}")
        for n, ins in enumerate(fa.cfg.nodes):
            lines.append(f"  [{n}] {format_instr(ins)}  @ {ins.loc.line}:{ins.loc.column}")
            lines.append(f"      in: {fa.result.inputs[n].render()}")
    return "\n".join(lines)


def dump_cfgs(analysis: Analysis) -> str:
    return "\n".join(to_dot(fa.cfg) for fa in analysis.functions)

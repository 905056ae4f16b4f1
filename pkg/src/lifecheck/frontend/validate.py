"""Semantic checks run after parsing: annotations, types, scopes and calls.

All problems are returned as diagnostics with E1xx codes; a program that
produces any of them is not analyzed further.
"""

from __future__ import annotations

from typing import Optional

from ..diagnostics import Diagnostic
from ..typeclass import TypeEnv
from .syntax import (
    AddressOf, Assign, Block, Call, Create, Deallocate, Delete, Destroy,
    ExprStmt, Function, If, Kind, Let, MoveOf, Name, Program, Return,
    SPECIAL_TOKENS, SourceLoc, TypeRef, While, stmt_exprs, walk_expr, walk_stmts,
)


def _param_kind(fn: Function, name: str, env: Optional[TypeEnv]) -> Optional[Kind]:
    p = fn.param(name)
    if p is None or env is None or not env.knows(p.type.name):
        return None
    return env.resolve(p.type).kind


def validate_annotations(program: Program, env: Optional[TypeEnv] = None) -> list[Diagnostic]:
    """Annotation well-formedness: targets and lifetime tokens must name real things."""
    env = env if env is not None else TypeEnv()
    out: list[Diagnostic] = []
    for fn in program.functions:
        for a in fn.annotations:
            if a.kind == "post":
                if a.target != fn.name:
                    out.append(Diagnostic(
                        "E100", a.loc,
                        f"post target must be function name: found {a.target!r}, expected {fn.name!r}"))
            else:
                if fn.param(a.target) is None:
                    out.append(Diagnostic(
                        "E100", a.loc, f"precondition names unknown parameter {a.target!r}"))
                elif _param_kind(fn, a.target, env) not in (Kind.POINTER, None):
                    out.append(Diagnostic(
                        "E100", a.loc, f"precondition target {a.target!r} is not a Pointer parameter"))
            for tok in a.lifetimes:
                if tok not in SPECIAL_TOKENS and fn.param(tok) is None:
                    out.append(Diagnostic(
                        "E100", a.loc, f"lifetime {tok!r} is not a parameter of {fn.name!r}"))
    return out


def validate_types(program: Program, env: TypeEnv) -> list[Diagnostic]:
    out: list[Diagnostic] = []

    def check(t: Optional[TypeRef]):
        if t is not None and not env.knows(t.name):
            out.append(Diagnostic("E102", t.loc, f"unknown type {t.name!r}"))

    for g in program.globals:
        check(g.type)
    for fn in program.functions:
        for p in fn.params:
            check(p.type)
        check(fn.ret)
        if fn.body is not None:
            for s in walk_stmts(fn.body):
                if isinstance(s, (Let, Create)):
                    check(s.type)
    return out


class _ScopeChecker:
    def __init__(self, program: Program, fn: Function, env: TypeEnv, out: list[Diagnostic]):
        self.program = program
        self.fn = fn
        self.env = env
        self.out = out
        self.globals = {g.name for g in program.globals}
        self.scopes: list[dict[str, str]] = []
        # name -> class kind, for catching one name declared with two classes
        self.kinds: dict[str, Kind] = {}

    def error(self, code: str, loc: SourceLoc, msg: str):
        self.out.append(Diagnostic(code, loc, msg))

    def live(self, name: str) -> bool:
        return any(name in s for s in self.scopes)

    def declare(self, name: str, t: TypeRef, loc: SourceLoc, origin: str):
        if self.live(name):
            self.error("E101", loc, f"redeclaration of {name!r} while it is still in scope")
        elif name in self.globals:
            self.error("E101", loc, f"local {name!r} shadows a global")
        if self.env.knows(t.name):
            kind = self.env.resolve(t).kind
            prev = self.kinds.setdefault(name, kind)
            if prev is not kind:
                self.error("E101", loc, f"{name!r} is declared both as {prev.value} and {kind.value}")
        self.scopes[-1][name] = origin

    def use(self, name: str, loc: SourceLoc):
        if not self.live(name) and name not in self.globals:
            self.error("E101", loc, f"use of undeclared variable {name!r}")

    def run(self):
        self.scopes.append({p.name: "param" for p in self.fn.params})
        for p in self.fn.params:
            if p.name in self.globals:
                self.error("E101", p.loc, f"parameter {p.name!r} shadows a global")
            if self.env.knows(p.type.name):
                self.kinds[p.name] = self.env.resolve(p.type).kind
        self.block(self.fn.body)

    def block(self, b: Block):
        self.scopes.append({})
        for s in b.stmts:
            self.stmt(s)
        self.scopes.pop()

    def expr(self, e):
        for sub in walk_expr(e):
            if isinstance(sub, Name):
                self.use(sub.id, sub.loc)
            elif isinstance(sub, (AddressOf, MoveOf)):
                self.use(sub.name, sub.loc)
            elif isinstance(sub, Call):
                self.call(sub)

    def call(self, c: Call):
        callee = self.program.function(c.callee)
        if callee is None:
            return  # reported by the checker as an unknown callee
        if len(c.args) != len(callee.params):
            self.error("E103", c.loc,
                       f"{c.callee!r} takes {len(callee.params)} argument(s), {len(c.args)} given")
            return
        for p, a in zip(callee.params, c.args):
            if p.by_ref and not isinstance(a, Name):
                self.error("E103", a.loc,
                           f"argument for reference parameter {p.name!r} must be a variable")

    def stmt(self, s):
        if isinstance(s, Let):
            if s.init is not None:
                self.expr(s.init)
            self.declare(s.name, s.type, s.loc, "let")
        elif isinstance(s, Create):
            self.declare(s.name, s.type, s.loc, "create")
        elif isinstance(s, Destroy):
            if s.name in self.scopes[-1]:
                del self.scopes[-1][s.name]
            elif self.live(s.name):
                self.error("E101", s.loc, f"destroy of {s.name!r}, which belongs to an enclosing scope")
            else:
                self.error("E101", s.loc, f"destroy of undeclared variable {s.name!r}")
        elif isinstance(s, Block):
            self.block(s)
        elif isinstance(s, If):
            self.expr(s.cond)
            self.block(s.then)
            if s.orelse is not None:
                self.block(s.orelse)
        elif isinstance(s, While):
            self.expr(s.cond)
            self.block(s.body)
        elif isinstance(s, (Assign, ExprStmt, Deallocate, Delete, Return)):
            for e in stmt_exprs(s):
                self.expr(e)
            if isinstance(s, Return) and s.value is None and self.fn.ret is not None:
                self.error("E101", s.loc, f"{self.fn.name!r} must return a value")
            if isinstance(s, Return) and s.value is not None and self.fn.ret is None:
                self.error("E101", s.loc, f"{self.fn.name!r} does not return a value")


def validate_scopes(program: Program, env: TypeEnv) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    seen: dict[str, SourceLoc] = {}
    gseen: set[str] = set()
    for g in program.globals:
        if g.name in gseen:
            out.append(Diagnostic("E101", g.loc, f"duplicate global {g.name!r}"))
        gseen.add(g.name)
    for fn in program.functions:
        if fn.name in seen:
            out.append(Diagnostic("E101", fn.loc, f"duplicate definition of function {fn.name!r}"))
        seen[fn.name] = fn.loc
        if fn.body is not None:
            _ScopeChecker(program, fn, env, out).run()
    return out


def validate_program(program: Program, env: Optional[TypeEnv] = None) -> list[Diagnostic]:
    """Every front-end check; an empty result means the program may be lowered."""
    env = env if env is not None else TypeEnv()
    out = validate_types(program, env)
    out += validate_annotations(program, env)
    if not out:
        out += validate_scopes(program, env)
    return out


"""Source-level rewrites that make object lifetimes explicit.

``lower_scopes`` turns ``let`` declarations into create/destroy pairs,
``desugar_heap`` rewrites ``new``/``delete`` into allocation-owner form, and
``reject_pointer_arith`` reports arithmetic on Pointer variables.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

from ..diagnostics import Diagnostic
from ..frontend.syntax import (
    Allocate, Assign, BinOp, Block, Create, Deallocate, Delete, Destroy,
    Function, If, IncDec, Index, Kind, Let, Name, New, Program, Return,
    SourceLoc, Stmt, TypeRef, While, stmt_exprs, walk_expr, walk_stmts,
)
from ..typeclass import TypeEnv


def _kind(env: TypeEnv, t: TypeRef) -> Kind:
    return env.resolve(t).kind


def _release(name: str, kind: Kind, loc: SourceLoc) -> list[Stmt]:
    # Owners give their memory back before their own cell goes away.
    out: list[Stmt] = []
    if kind is Kind.OWNER:
        out.append(Deallocate(Name(name, loc=loc), implicit=True, loc=loc))
    out.append(Destroy(name, loc=loc))
    return out


class _ScopeLowerer:
    def __init__(self, fn: Function, env: TypeEnv):
        self.fn = fn
        self.env = env
        # one list per open block: (name, kind) of `let`s still owned by it
        self.open: list[list[tuple[str, Kind]]] = []

    def param_cleanup(self, loc: SourceLoc) -> list[Stmt]:
        out: list[Stmt] = []
        for p in reversed(self.fn.params):
            if not p.by_ref:
                out += _release(p.name, _kind(self.env, p.type), loc)
        return out

    def function(self) -> Function:
        body = self.block(self.fn.body, outermost=True)
        return replace(self.fn, body=body)

    def block(self, b: Block, outermost: bool = False) -> Block:
        self.open.append([])
        out: list[Stmt] = []
        for s in b.stmts:
            out += self.stmt(s)
        scope = self.open.pop()
        if out and isinstance(out[-1], Return):
            # the return already carries this block's cleanup
            return Block(tuple(out), loc=b.loc, end=b.end)
        for name, kind in reversed(scope):
            out += _release(name, kind, b.end)
        if outermost:
            out += self.param_cleanup(b.end)
        return Block(tuple(out), loc=b.loc, end=b.end)

    def stmt(self, s: Stmt) -> list[Stmt]:
        if isinstance(s, Let):
            self.open[-1].append((s.name, _kind(self.env, s.type)))
            out: list[Stmt] = [Create(s.name, s.type, loc=s.loc)]
            if s.init is not None:
                out.append(Assign(Name(s.name, loc=s.loc), s.init, "=", loc=s.loc))
            return out
        if isinstance(s, Destroy):
            self.open[-1] = [(n, k) for n, k in self.open[-1] if n != s.name]
            return [s]
        if isinstance(s, Block):
            return [self.block(s)]
        if isinstance(s, If):
            orelse = self.block(s.orelse) if s.orelse is not None else None
            return [replace(s, then=self.block(s.then), orelse=orelse)]
        if isinstance(s, While):
            return [replace(s, body=self.block(s.body))]
        if isinstance(s, Return):
            cleanup: list[Stmt] = []
            for scope in reversed(self.open):
                for name, kind in reversed(scope):
                    cleanup += _release(name, kind, s.loc)
            cleanup += self.param_cleanup(s.loc)
            return [replace(s, cleanup=tuple(cleanup))]
        return [s]


def lower_scopes(program: Program, env: TypeEnv | None = None) -> Program:
    """Replace ``let`` with explicit create/destroy (reverse declaration order)."""
    env = env if env is not None else TypeEnv()
    fns = tuple(
        f if f.body is None else _ScopeLowerer(f, env).function()
        for f in program.functions
    )
    return replace(program, functions=fns)


def _identifiers(program: Program) -> set[str]:
    names = {g.name for g in program.globals}
    for f in program.functions:
        names.add(f.name)
        names.update(p.name for p in f.params)
        if f.body is None:
            continue
        for s in walk_stmts(f.body):
            if isinstance(s, (Let, Create, Destroy)):
                names.add(s.name)
            for e in stmt_exprs(s):
                for sub in walk_expr(e):
                    if isinstance(sub, Name):
                        names.add(sub.id)
    return names


class _HeapDesugar:
    def __init__(self, program: Program):
        taken = _identifiers(program)
        self.fresh = (f"g_{k}" for k in itertools.count(1) if f"g_{k}" not in taken)

    def block(self, b: Block) -> Block:
        out: list[Stmt] = []
        for s in b.stmts:
            out += self.stmt(s)
        return replace(b, stmts=tuple(out))

    def stmt(self, s: Stmt) -> list[Stmt]:
        if isinstance(s, Assign) and isinstance(s.value, New):
            g = next(self.fresh)
            loc = s.loc
            return [
                Create(g, TypeRef("Owner", loc=loc), loc=loc),
                Assign(Name(g, loc=loc), Allocate(s.value.size, loc=s.value.loc), "=", loc=loc),
                Assign(s.target, Name(g, loc=loc), "=", loc=loc),
            ]
        if isinstance(s, Delete):
            return [Deallocate(s.operand, loc=s.loc)]
        if isinstance(s, Block):
            return [self.block(s)]
        if isinstance(s, If):
            orelse = self.block(s.orelse) if s.orelse is not None else None
            return [replace(s, then=self.block(s.then), orelse=orelse)]
        if isinstance(s, While):
            return [replace(s, body=self.block(s.body))]
        if isinstance(s, Return) and s.cleanup:
            return [replace(s, cleanup=tuple(x for c in s.cleanup for x in self.stmt(c)))]
        return [s]


def desugar_heap(program: Program) -> Program:
    """``p = new(n)`` becomes a fresh owner ``g_k``; ``delete e`` becomes ``deallocate(e)``.

    The owners are never destroyed: heap memory outlives the scope that
    allocated it.
    """
    d = _HeapDesugar(program)
    fns = tuple(
        f if f.body is None else replace(f, body=d.block(f.body))
        for f in program.functions
    )
    return replace(program, functions=fns)


def variable_kinds(program: Program, fn: Function, env: TypeEnv) -> dict[str, Kind]:
    kinds = {g.name: _kind(env, g.type) for g in program.globals}
    for p in fn.params:
        kinds[p.name] = _kind(env, p.type)
    if fn.body is not None:
        for s in walk_stmts(fn.body):
            if isinstance(s, (Let, Create)):
                kinds[s.name] = _kind(env, s.type)
    return kinds


def _is_pointer(e, kinds: dict[str, Kind]) -> bool:
    return isinstance(e, Name) and kinds.get(e.id) is Kind.POINTER


def reject_pointer_arith(program: Program, env: TypeEnv | None = None) -> list[Diagnostic]:
    """One E003 per arithmetic form applied directly to a Pointer variable."""
    env = env if env is not None else TypeEnv()
    out: list[Diagnostic] = []
    for fn in program.functions:
        if fn.body is None:
            continue
        kinds = variable_kinds(program, fn, env)

        def report(loc: SourceLoc, name: str, form: str):
            out.append(Diagnostic("E003", loc, f"pointer arithmetic on {name!r} ({form})"))

        for s in walk_stmts(fn.body):
            if isinstance(s, Assign) and s.op != "=" and _is_pointer(s.target, kinds):
                report(s.loc, s.target.id, f"{s.target.id} {s.op} ...")
            for top in stmt_exprs(s):
                for e in walk_expr(top):
                    if isinstance(e, BinOp) and e.op in ("+", "-"):
                        for side in (e.lhs, e.rhs):
                            if _is_pointer(side, kinds):
                                report(e.loc, side.id, f"'{e.op}' with a Pointer operand")
                                break
                    elif isinstance(e, IncDec) and _is_pointer(e.operand, kinds):
                        form = f"{e.op}{e.operand.id}" if e.prefix else f"{e.operand.id}{e.op}"
                        report(e.loc, e.operand.id, form)
                    elif isinstance(e, Index):
                        for side in (e.base, e.index):
                            if _is_pointer(side, kinds):
                                report(e.loc, side.id, "indexing with a Pointer")
                                break
    return out


"""Flatten a lowered function into a control-flow graph of primitive instructions.

Nested expressions are broken up with temporaries named ``%t1``, ``%t2``, ...
in the order the expression nodes are visited.
"""

from __future__ import annotations

import itertools
from dataclasses import replace
from typing import Optional

from ..frontend.printer import format_expr
from ..frontend.syntax import (
    AddressOf, Allocate, Assign, BinOp, Block, Call, Create, Deallocate,
    Deref, Destroy, ExprStmt, Function, If, IncDec, Index, IntLit, Kind, MoveOf,
    Name, NullLit, Program, Return, UnaryOp, While,
    walk_stmts,
)
from ..typeclass import TypeEnv
from . import instr as I
from .lower import variable_kinds


class _Builder:
    def __init__(self, program: Program, fn: Function, env: TypeEnv):
        self.program = program
        self.fn = fn
        self.env = env
        self.nodes: list[I.Instr] = []
        self.succs: list[list[int]] = []
        self.frontier: list[int] = []
        self.kinds = variable_kinds(program, fn, env)
        self.const: dict[str, bool] = {g.name: g.type.const for g in program.globals}
        self.const.update({p.name: p.type.const for p in fn.params})
        for s in walk_stmts(fn.body):
            if isinstance(s, Create):
                self.const[s.name] = s.type.const
        self.globals = frozenset(g.name for g in program.globals)
        self.temps = itertools.count(1)
        taken = set(self.kinds)
        self.sites = (f"alloc_{k}" for k in itertools.count(1) if f"alloc_{k}" not in taken)

    # -- graph plumbing

    def emit(self, ins: I.Instr) -> int:
        n = len(self.nodes)
        self.nodes.append(ins)
        self.succs.append([])
        for f in self.frontier:
            if n not in self.succs[f]:
                self.succs[f].append(n)
        self.frontier = [n]
        return n

    def temp(self, kind: Kind) -> str:
        t = f"%t{next(self.temps)}"
        self.kinds[t] = kind
        return t

    def kind_of(self, name: str) -> Kind:
        return self.kinds.get(name, Kind.VALUE)

    def _ret_kind(self, callee: str) -> Optional[Kind]:
        f = self.program.function(callee)
        if f is None or f.ret is None:
            return None
        return self.env.resolve(f.ret).kind

    # -- expressions

    def value(self, e, kind: Kind = Kind.VALUE) -> str:
        """Emit code computing ``e``; return the variable holding the result."""
        if isinstance(e, Name):
            return e.id
        if isinstance(e, AddressOf):
            kind = Kind.POINTER
        elif isinstance(e, MoveOf):
            kind = self.kind_of(e.name)
        elif isinstance(e, Call):
            kind = self._ret_kind(e.callee) or kind
        t = self.temp(kind)
        self.into(t, e)
        return t

    def address(self, e) -> tuple[str, str]:
        """For an lvalue ``*x`` / ``[x]`` / ``b[i]``: the variable holding its address."""
        if isinstance(e, Deref):
            return self.value(e.operand, Kind.POINTER), format_expr(e.operand)
        assert isinstance(e, Index)
        base = self.value(e.base, Kind.POINTER)
        idx = self.value(e.index)
        t = self.temp(Kind.POINTER)
        self.emit(I.Compute(t, "+", (base, idx), loc=e.loc))
        return t, format_expr(e)

    def into(self, dst: str, e) -> None:
        loc = e.loc
        if isinstance(e, Name):
            self.emit(I.Copy(dst, e.id, loc=loc))
        elif isinstance(e, IntLit):
            self.emit(I.Const(dst, e.value, loc=loc))
        elif isinstance(e, NullLit):
            self.emit(I.Const(dst, None, loc=loc))
        elif isinstance(e, AddressOf):
            self.emit(I.TakeAddress(dst, e.name, loc=loc))
        elif isinstance(e, MoveOf):
            self.emit(I.MoveAssign(dst, e.name, loc=loc))
        elif isinstance(e, (Deref, Index)):
            addr, text = self.address(e)
            self.emit(I.DerefRead(dst, addr, text, loc=loc))
        elif isinstance(e, BinOp):
            a = self.value(e.lhs)
            b = self.value(e.rhs)
            self.emit(I.Compute(dst, e.op, (a, b), loc=loc))
        elif isinstance(e, UnaryOp):
            a = self.value(e.operand)
            self.emit(I.Compute(dst, e.op, (a,), loc=loc))
        elif isinstance(e, IncDec):
            self.incdec(e, dst)
        elif isinstance(e, Call):
            self.call(e, dst)
        else:
            raise TypeError(f"cannot lower {type(e).__name__} here")

    def incdec(self, e: IncDec, dst: Optional[str]) -> None:
        op = e.op[0]
        one = self.temp(Kind.VALUE)
        if isinstance(e.operand, Name):
            x = e.operand.id
            if dst is not None and not e.prefix:
                self.emit(I.Copy(dst, x, loc=e.loc))
            if self.kind_of(x) is Kind.OWNER:
                self.emit(I.OwnerUse(x, False, f"{format_expr(e)}", loc=e.loc))
            self.emit(I.Const(one, 1, loc=e.loc))
            self.emit(I.Compute(x, op, (x, one), loc=e.loc))
            if dst is not None and e.prefix:
                self.emit(I.Copy(dst, x, loc=e.loc))
            return
        addr, text = self.address(e.operand)
        old = self.temp(Kind.VALUE)
        new = self.temp(Kind.VALUE)
        self.emit(I.DerefRead(old, addr, text, loc=e.loc))
        self.emit(I.Const(one, 1, loc=e.loc))
        self.emit(I.Compute(new, op, (old, one), loc=e.loc))
        self.emit(I.DerefWrite(addr, new, text, loc=e.loc))
        if dst is not None:
            self.emit(I.Copy(dst, new if e.prefix else old, loc=e.loc))

    def call(self, c: Call, dst: Optional[str]) -> None:
        callee = self.program.function(c.callee)
        params = callee.params if callee is not None else ()
        args: list[str] = []
        uses: list[str] = []
        for k, a in enumerate(c.args):
            p = params[k] if k < len(params) else None
            if p is not None and p.by_ref and isinstance(a, Name):
                op = a.id
            else:
                pk = self.env.resolve(p.type).kind if p is not None else Kind.VALUE
                op = self.value(a, pk)
            args.append(op)
            if self.kind_of(op) is Kind.OWNER:
                # by-value Owner parameters receive a copy; only a non-const
                # reference can reallocate the caller's memory
                const = p is not None and (p.type.const or not p.by_ref)
                if not const and op not in uses:
                    uses.append(op)
        check = len(self.nodes)
        for o in uses:
            self.emit(I.OwnerUse(o, False, f"passed to {c.callee!r} by non-const reference", loc=c.loc))
        texts = tuple(format_expr(a) for a in c.args)
        self.emit(I.CallInstr(dst, c.callee, tuple(args), check, texts, loc=c.loc))

    # -- statements

    def block(self, b: Block) -> None:
        for s in b.stmts:
            self.stmt(s)

    def stmt(self, s) -> None:
        loc = s.loc
        if isinstance(s, Create):
            self.emit(I.Create(s.name, self.env.resolve(s.type).kind, loc=loc))
        elif isinstance(s, Destroy):
            self.emit(I.Destroy(s.name, loc=loc))
        elif isinstance(s, Deallocate):
            if isinstance(s.operand, Name):
                v = s.operand.id
            else:
                v = self.value(s.operand, Kind.POINTER)
            self.emit(I.Dealloc(v, s.implicit, format_expr(s.operand), loc=loc))
        elif isinstance(s, Assign):
            self.assign(s)
        elif isinstance(s, ExprStmt):
            e = s.expr
            if isinstance(e, Call):
                self.call(e, None)
            elif isinstance(e, IncDec):
                self.incdec(e, None)
            else:
                self.value(e)
        elif isinstance(s, Block):
            self.block(s)
        elif isinstance(s, If):
            self.value(s.cond)
            cond = self.emit(I.Nop("if", loc=loc))
            self.block(s.then)
            after_then = self.frontier
            self.frontier = [cond]
            if s.orelse is not None:
                self.block(s.orelse)
            self.frontier = after_then + self.frontier
            if self.frontier:
                self.emit(I.Nop("endif", loc=loc))
        elif isinstance(s, While):
            head = len(self.nodes)
            self.value(s.cond)
            cond = self.emit(I.Nop("while", loc=loc))
            self.block(s.body)
            for f in self.frontier:
                if head not in self.succs[f]:
                    self.succs[f].append(head)
            self.frontier = [cond]
        elif isinstance(s, Return):
            var = None
            if s.value is not None:
                kind = self.env.resolve(self.fn.ret).kind if self.fn.ret is not None else Kind.VALUE
                if s.cleanup or not isinstance(s.value, Name):
                    # evaluate before the scope cleanup destroys anything it reads
                    var = self.temp(kind)
                    self.into(var, s.value)
                else:
                    var = s.value.id
            for c in s.cleanup:
                self.stmt(c)
            self.emit(I.ReturnInstr(var, loc=loc))
            self.frontier = []
        else:
            raise TypeError(f"cannot lower statement {type(s).__name__}")

    def assign(self, s: Assign) -> None:
        loc = s.loc
        t, v = s.target, s.value
        if isinstance(t, Name):
            x = t.id
            if s.op != "=":
                rhs = self.value(v)
                if self.kind_of(x) is Kind.OWNER:
                    self.emit(I.OwnerUse(x, False, f"{x} {s.op} ...", loc=loc))
                self.emit(I.Compute(x, s.op[0], (x, rhs), loc=loc))
            elif isinstance(v, Allocate):
                size = self.value(v.size)
                self.emit(I.AllocAssign(x, size, next(self.sites), loc=loc))
            else:
                self.into(x, v)
            return
        addr, text = self.address(t)
        if s.op == "=":
            val = self.value(v)
            self.emit(I.DerefWrite(addr, val, text, loc=loc))
        else:
            rhs = self.value(v)
            old = self.temp(Kind.VALUE)
            new = self.temp(Kind.VALUE)
            self.emit(I.DerefRead(old, addr, text, loc=loc))
            self.emit(I.Compute(new, s.op[0], (old, rhs), loc=loc))
            self.emit(I.DerefWrite(addr, new, text, loc=loc))

    def build(self) -> I.Cfg:
        self.emit(I.Nop("entry", loc=self.fn.loc))
        self.block(self.fn.body)
        if self.frontier:
            self.emit(I.ReturnInstr(None, loc=self.fn.body.end))
        for n in self.nodes:
            if isinstance(n, I.AllocAssign):
                self.kinds[n.site] = Kind.OWNER
        return _prune(I.Cfg(
            self.fn.name, self.nodes, self.succs, 0, self.kinds, self.const, self.globals,
        ))


def _prune(cfg: I.Cfg) -> I.Cfg:
    seen = {cfg.entry}
    todo = [cfg.entry]
    while todo:
        for m in cfg.succs[todo.pop()]:
            if m not in seen:
                seen.add(m)
                todo.append(m)
    if len(seen) == len(cfg.nodes):
        return cfg
    order = sorted(seen)
    renum = {old: new for new, old in enumerate(order)}
    nodes = []
    for old in order:
        ins = cfg.nodes[old]
        if isinstance(ins, I.CallInstr):
            ins = replace(ins, check_node=renum[ins.check_node])
        nodes.append(ins)
    succs = [[renum[m] for m in cfg.succs[old]] for old in order]
    return replace(cfg, nodes=nodes, succs=succs, entry=renum[cfg.entry])


def build_cfg(fn: Function, program: Program, env: TypeEnv | None = None) -> I.Cfg:
    """CFG of a lowered, desugared function. Node 0 is a ``nop entry``."""
    if fn.body is None:
        raise ValueError(f"{fn.name!r} has no body")
    return _Builder(program, fn, env if env is not None else TypeEnv()).build()


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(cfg: I.Cfg) -> str:
    lines = [f'digraph "{_dot_escape(cfg.function)}" {{', '  node [shape=box, fontname="monospace"];']
    for n, ins in enumerate(cfg.nodes):
        label = f"{n}: {_dot_escape(I.format_instr(ins))}\\n{ins.loc.line}:{ins.loc.column}"
        lines.append(f'  n{n} [label="{label}"];')
    for a, b in cfg.edges:
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines)


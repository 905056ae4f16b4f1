"""Per-instruction transfer functions and the entry seed."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..frontend.syntax import (
    GLOBAL_TOKEN, INVALID_TOKEN, NULL_TOKEN, Function, Kind, Program,
)
from ..normalize import instr as I
from ..normalize.instr import Cfg
from ..typeclass import TypeEnv
from .pset import (
    BOTTOM, GLOBAL, INVALID, NULL, Cause, Pmap, PsetEntry, invalidate, var,
)

PARAM_PREFIX = "__param_"

_EMPTY: frozenset = frozenset()


@dataclass
class Context:
    """What transfer functions need beyond the pmap itself."""

    program: Program
    function: Function
    env: TypeEnv
    kinds: dict[str, Kind]
    globals: frozenset[str] = frozenset()
    internal_errors: list[str] = field(default_factory=list)

    @classmethod
    def for_cfg(cls, program: Program, fn: Function, cfg: Cfg, env: TypeEnv) -> Context:
        return cls(program, fn, env, cfg.kinds, cfg.globals)

    def kind(self, v: str) -> Kind:
        return self.kinds.get(v, Kind.VALUE)

    def tracked(self, v: str) -> bool:
        return self.kind(v) is not Kind.VALUE

    def signature(self, name: str) -> Optional[Function]:
        return self.program.function(name)

    def param_kind(self, fn: Function, index: int) -> Optional[Kind]:
        if index >= len(fn.params):
            return None
        return self.env.resolve(fn.params[index].type).kind


def read(d: Pmap, v: str, ctx: Context, ins=None) -> tuple[frozenset, frozenset]:
    """The pset and invalidation causes of operand ``v``."""
    ps = d.get(v)
    if ps is not None:
        return ps, d.causes_of(v)
    if not ctx.tracked(v):
        return _EMPTY, _EMPTY
    where = f" at {ins.loc}" if ins is not None else ""
    ctx.internal_errors.append(f"operand {v!r} has no pset{where}")
    return frozenset({INVALID}), _EMPTY


def default_call_result(d: Pmap, args, ctx: Context, ins=None) -> tuple[set, set]:
    """Result pset of a call without a postcondition: whatever the arguments reach, or null."""
    ps: set[PsetEntry] = {NULL}
    cs: set[Cause] = set()
    for a in args:
        k = ctx.kind(a)
        if k is Kind.POINTER:
            s, c = read(d, a, ctx, ins)
            ps |= s
            cs |= c
        elif k is Kind.OWNER:
            s, c = read(d, a, ctx, ins)
            ps |= s
            cs |= c
            ps.add(var(a, 1))
    return ps, cs


def post_result(tokens, callee: Function, args, d: Pmap, ctx: Context, ins=None):
    ps: set[PsetEntry] = set()
    cs: set[Cause] = set()
    for tok in tokens:
        if tok == NULL_TOKEN:
            ps.add(NULL)
        elif tok == GLOBAL_TOKEN:
            ps.add(GLOBAL)
        elif tok == INVALID_TOKEN:
            ps.add(INVALID)
            cs.add(Cause(ins.loc if ins is not None else callee.loc,
                         f"result of {callee.name!r} is declared invalid"))
        else:
            idx = [p.name for p in callee.params].index(tok)
            if idx < len(args):
                s, c = read(d, args[idx], ctx, ins)
                ps |= s
                cs |= c
    return ps, cs


def _deref(d: Pmap, ps, causes, ctx: Context, ins) -> tuple[set, set]:
    out: set[PsetEntry] = set()
    cs: set[Cause] = set()
    for e in ps:
        if e.is_var:
            if e.level >= 1:
                out.add(var(e.name, e.level + 1))
            elif not ctx.tracked(e.name):
                out.add(INVALID)
                cs.add(Cause(ins.loc, f"'{e.name}' holds a plain value, not an address"))
            elif e.name in d:
                out |= d[e.name]
                cs |= d.causes_of(e.name)
        elif e == GLOBAL:
            out.add(GLOBAL)
        elif e == NULL:
            out.add(INVALID)
            cs.add(Cause(ins.loc, "dereference of null"))
        else:
            out.add(INVALID)
            cs |= causes
    return out, cs


def transfer(ins: I.Instr, d: Pmap, ctx: Context) -> Pmap:
    loc = ins.loc
    if isinstance(ins, I.Create):
        if ins.kind is Kind.OWNER:
            return d.set(ins.var, {var(ins.var, 1)})
        if ins.kind is Kind.POINTER:
            return d.set(ins.var, {INVALID}, {Cause(loc, "never assigned")})
        return d
    if isinstance(ins, I.Destroy):
        return invalidate(d.remove(ins.var), [ins.var], loc, f"destroy({ins.var})")
    if isinstance(ins, I.OwnerUse):
        if ins.const:
            return d
        o = ins.owner
        what = f"'{o}' may reallocate" + (f": {ins.why}" if ins.why else "")
        out = invalidate(d, [o], loc, what, min_level=1, skip=[o])
        owned = {e.name for e in d.get(o, _EMPTY) if e.is_var and e.level >= 1}
        return invalidate(out, owned, loc, what, min_level=1, weak=True, skip=[o])
    if isinstance(ins, I.Copy):
        if not ctx.tracked(ins.dst):
            return d
        if not ctx.tracked(ins.src):
            return d.set(ins.dst, {INVALID}, {Cause(loc, f"assigned the plain value '{ins.src}'")})
        ps, cs = read(d, ins.src, ctx, ins)
        return d.set(ins.dst, ps, cs)
    if isinstance(ins, I.MoveAssign):
        out = d
        if ctx.tracked(ins.dst):
            ps, cs = read(d, ins.src, ctx, ins)
            out = out.set(ins.dst, ps, cs)
        if ctx.tracked(ins.src):
            out = out.set(ins.src, {INVALID}, {Cause(loc, f"moved from: {ins.dst} = move {ins.src}")})
        return out
    if isinstance(ins, I.TakeAddress):
        if not ctx.tracked(ins.dst):
            return d
        if ins.var in ctx.globals:
            return d.set(ins.dst, {GLOBAL})
        return d.set(ins.dst, {var(ins.var, 0)})
    if isinstance(ins, I.DerefRead):
        if not ctx.tracked(ins.dst):
            return d
        ps, cs = read(d, ins.src, ctx, ins)
        out, ocs = _deref(d, ps, cs, ctx, ins)
        return d.set(ins.dst, out, ocs)
    if isinstance(ins, I.AllocAssign):
        site = var(ins.site, 1)
        out = d.set(ins.site, {site})
        if ctx.tracked(ins.var):
            out = out.set(ins.var, {site})
        return out
    if isinstance(ins, I.Dealloc):
        ps, _ = read(d, ins.var, ctx, ins)
        owners = sorted({e.name for e in ps if e.is_var and e.level >= 1})
        return invalidate(d, owners, loc, f"deallocate({ins.text or ins.var})", min_level=1, weak=True)
    if isinstance(ins, I.CallInstr):
        return _call(ins, d, ctx)
    if isinstance(ins, I.Const):
        if not ctx.tracked(ins.dst):
            return d
        if ins.value is None:
            return d.set(ins.dst, {NULL})
        return d.set(ins.dst, {INVALID}, {Cause(loc, f"assigned the integer {ins.value}")})
    if isinstance(ins, I.Compute):
        if not ctx.tracked(ins.dst):
            return d
        ps: set[PsetEntry] = set()
        cs: set[Cause] = set()
        any_tracked = False
        for s in ins.srcs:
            if ctx.tracked(s):
                any_tracked = True
                p, c = read(d, s, ctx, ins)
                ps |= p
                cs |= c
        if not any_tracked:
            return d.set(ins.dst, {INVALID}, {Cause(loc, "computed from plain values")})
        return d.set(ins.dst, ps, cs)
    return d


def _call(ins: I.CallInstr, d: Pmap, ctx: Context) -> Pmap:
    callee = ctx.signature(ins.callee)
    default_ps, default_cs = default_call_result(d, ins.args, ctx, ins)
    out = d
    if callee is not None:
        # a callee may re-seat a Pointer it receives by non-const reference
        for k, a in enumerate(ins.args):
            if k < len(callee.params):
                p = callee.params[k]
                if p.by_ref and not p.type.const and ctx.param_kind(callee, k) is Kind.POINTER:
                    out = out.set(a, default_ps, default_cs)
    if ins.result is None or not ctx.tracked(ins.result):
        return out
    if callee is not None and callee.ret is not None and ctx.env.resolve(callee.ret).kind is Kind.OWNER:
        return out.set(ins.result, {var(ins.result, 1)})
    post = callee.post() if callee is not None else None
    if post is not None:
        ps, cs = post_result(post, callee, ins.args, d, ctx, ins)
        return out.set(ins.result, ps, cs)
    return out.set(ins.result, default_ps, default_cs)


def _pre_pset(fn: Function, name: str, ctx: Context, visiting: frozenset) -> set[PsetEntry]:
    p = fn.param(name)
    kind = ctx.env.resolve(p.type).kind
    if kind is Kind.OWNER:
        return {var(name, 1)}
    if kind is Kind.VALUE:
        return set()
    pre = fn.pre().get(name)
    if pre is None:
        return {var(PARAM_PREFIX + name, 1)}
    out: set[PsetEntry] = set()
    for tok in pre:
        if tok == NULL_TOKEN:
            out.add(NULL)
        elif tok == GLOBAL_TOKEN:
            out.add(GLOBAL)
        elif tok == INVALID_TOKEN:
            out.add(INVALID)
        elif tok == name or tok in visiting:
            continue
        else:
            out |= _pre_pset(fn, tok, ctx, visiting | {name})
    return out


def seed_entry(fn: Function, ctx: Context) -> Pmap:
    """Psets at function entry: globals, then parameters (honouring preconditions)."""
    d = BOTTOM
    for g in ctx.program.globals:
        cls = ctx.env.resolve(g.type)
        if cls.kind is Kind.OWNER:
            d = d.set(g.name, {GLOBAL} if cls.const else {var(g.name, 1)})
        elif cls.kind is Kind.POINTER:
            d = d.set(g.name, {GLOBAL})
    for p in fn.params:
        kind = ctx.env.resolve(p.type).kind
        if kind is Kind.VALUE:
            continue
        ps = _pre_pset(fn, p.name, ctx, frozenset())
        causes = {Cause(p.loc, "precondition allows an invalid argument")} if INVALID in ps else set()
        d = d.set(p.name, ps, causes)
    return d

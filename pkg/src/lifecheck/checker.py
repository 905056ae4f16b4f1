"""Rule enforcement over a solved function: dereferences, calls and returns."""

from __future__ import annotations

from dataclasses import dataclass

from .analysis.pset import GLOBAL, INVALID, NULL, Pmap, format_pset
from .analysis.solver import DataflowResult
from .analysis.transfer import PARAM_PREFIX, Context, read
from .diagnostics import Diagnostic, Note
from .frontend.syntax import GLOBAL_TOKEN, INVALID_TOKEN, NULL_TOKEN, Function, Kind
from .normalize import instr as I
from .normalize.instr import Cfg


@dataclass
class CheckOptions:
    warnings: bool = False
    certain_only: bool = False
    strict_calls: bool = False


def _notes(subject: str, causes) -> tuple[Note, ...]:
    out = []
    for c in sorted(causes, key=lambda c: (c.loc, c.what)):
        if c.what == "never assigned":
            out.append(Note(c.loc, f"'{subject}' declared here and never assigned"))
        else:
            out.append(Note(c.loc, f"'{subject}' invalidated here: {c.what}"))
    return tuple(out)


def _flagged(ps, opts: CheckOptions) -> bool:
    if opts.certain_only:
        return ps == frozenset({INVALID})
    return INVALID in ps


class _FunctionChecker:
    def __init__(self, fn: Function, cfg: Cfg, result: DataflowResult, ctx: Context, opts: CheckOptions):
        self.fn = fn
        self.cfg = cfg
        self.result = result
        self.ctx = ctx
        self.opts = opts
        self.out: list[Diagnostic] = []
        self.sites = {n.site for n in cfg.nodes if isinstance(n, I.AllocAssign)}

    def run(self) -> list[Diagnostic]:
        for n, ins in enumerate(self.cfg.nodes):
            d = self.result.inputs[n]
            if isinstance(ins, I.DerefRead):
                self.deref(ins, ins.src, d, "dereference")
            elif isinstance(ins, I.DerefWrite):
                self.deref(ins, ins.dst, d, "dereference")
            elif isinstance(ins, I.Dealloc) and not ins.implicit:
                self.deref(ins, ins.var, d, "deallocation through")
            elif isinstance(ins, I.CallInstr):
                pre_state = self.result.inputs[ins.check_node] if ins.check_node >= 0 else d
                self.call(ins, pre_state)
            elif isinstance(ins, I.ReturnInstr):
                self.ret(ins, d)
        return self.out

    # -- rule 1 and 2

    def deref(self, ins, v: str, d: Pmap, action: str) -> None:
        if not self.ctx.tracked(v) or v not in d:
            return
        ps = d[v]
        text = ins.text or v
        if _flagged(ps, self.opts):
            causes = d.causes_of(v)
            if self.ctx.kind(v) is Kind.OWNER:
                moved = any(c.what.startswith("moved from") for c in causes)
                what = "moved-from Owner" if moved else "Owner whose memory may be released"
                self.out.append(Diagnostic(
                    "E002", ins.loc, f"{action} of {what} '{text}'" if action == "dereference"
                    else f"{action} {what} '{text}'", _notes(text, causes)))
            else:
                certainty = "invalid" if ps == frozenset({INVALID}) else "possibly invalid"
                msg = (f"{action} of {certainty} Pointer '{text}'" if action == "dereference"
                       else f"{action} {certainty} Pointer '{text}'")
                self.out.append(Diagnostic("E001", ins.loc, msg, _notes(text, causes)))
        if self.opts.warnings and NULL in ps:
            self.out.append(Diagnostic("W101", ins.loc, f"{action} of possibly null '{text}'"))

    # -- rule 4

    def _token_psets(self, tokens, callee: Function, args, d: Pmap):
        names = [p.name for p in callee.params]
        out = []
        for tok in tokens:
            if tok == NULL_TOKEN:
                out.append((tok, frozenset({NULL})))
            elif tok == GLOBAL_TOKEN:
                out.append((tok, frozenset({GLOBAL})))
            elif tok == INVALID_TOKEN:
                out.append((tok, frozenset({INVALID})))
            elif tok in names and names.index(tok) < len(args):
                ps, _ = read(d, args[names.index(tok)], self.ctx)
                out.append((tok, frozenset(ps)))
        return out

    def _owner_names(self, ps) -> set[str]:
        out = set()
        for e in ps:
            if not e.is_var or e.name.startswith(PARAM_PREFIX):
                continue
            if e.level >= 1 or self.ctx.kind(e.name) is Kind.OWNER:
                out.add(e.name)
        return out

    def _nonconst_owner(self, name: str) -> bool:
        return not self.cfg.const.get(name, False)

    def call(self, ins: I.CallInstr, d: Pmap) -> None:
        callee = self.ctx.signature(ins.callee)
        texts = ins.texts or ins.args
        if callee is None:
            code = "E004" if self.opts.strict_calls else "W102"
            if code == "E004" or self.opts.warnings:
                self.out.append(Diagnostic(code, ins.loc, f"call to unknown function '{ins.callee}'"))
        pre = callee.pre() if callee is not None else {}
        params = callee.params if callee is not None else ()
        defaulted: list[int] = []
        for k, a in enumerate(ins.args):
            kind = self.ctx.kind(a)
            if kind is Kind.VALUE or a not in d:
                continue
            ps = d[a]
            p = params[k] if k < len(params) else None
            if _flagged(ps, self.opts):
                what = "Pointer" if kind is Kind.POINTER else "Owner"
                self.out.append(Diagnostic(
                    "E004", ins.loc,
                    f"passing possibly invalid {what} '{texts[k]}' to '{ins.callee}'",
                    _notes(texts[k], d.causes_of(a))))
                continue
            if kind is not Kind.POINTER:
                continue
            if p is not None and p.name in pre:
                cands = self._token_psets(pre[p.name], callee, ins.args, d)
                if not any(ps == c for _, c in cands):
                    want = "{" + ",".join(pre[p.name]) + "}"
                    self.out.append(Diagnostic(
                        "E004", ins.loc,
                        f"argument '{texts[k]}' violates pre({p.name},{want}) of '{ins.callee}': "
                        f"its pset is {format_pset(ps)}"))
            else:
                defaulted.append(k)
        self._default_pre(ins, d, defaulted, params, texts)

    def _default_pre(self, ins, d, defaulted, params, texts) -> None:
        mutated = set()
        for k, a in enumerate(ins.args):
            p = params[k] if k < len(params) else None
            if (self.ctx.kind(a) is Kind.OWNER and p is not None and p.by_ref
                    and not p.type.const and a not in self.ctx.globals):
                mutated.add(a)
        owners_of = {k: self._owner_names(d[ins.args[k]]) for k in defaulted}
        for k in defaulted:
            for o in sorted(owners_of[k]):
                if o in self.ctx.globals and self.ctx.kind(o) is Kind.OWNER and self._nonconst_owner(o):
                    self.out.append(Diagnostic(
                        "E004", ins.loc,
                        f"Pointer argument '{texts[k]}' points into non-const global Owner '{o}'"))
                elif o in mutated:
                    self.out.append(Diagnostic(
                        "E004", ins.loc,
                        f"Pointer argument '{texts[k]}' points into '{o}', which '{ins.callee}' "
                        f"receives by non-const reference"))
        for i, k1 in enumerate(defaulted):
            for k2 in defaulted[i + 1:]:
                shared = sorted(o for o in owners_of[k1] & owners_of[k2] if self._nonconst_owner(o))
                if shared:
                    self.out.append(Diagnostic(
                        "E004", ins.loc,
                        f"Pointer arguments '{texts[k1]}' and '{texts[k2]}' both point into "
                        f"non-const Owner '{shared[0]}'"))

    # -- rule 5

    def ret(self, ins: I.ReturnInstr, d: Pmap) -> None:
        fn = self.fn
        if ins.var is None or fn.ret is None:
            return
        if self.ctx.env.resolve(fn.ret).kind is not Kind.POINTER:
            return
        ps = d.get(ins.var)
        if ps is None:
            return
        if _flagged(ps, self.opts):
            self.out.append(Diagnostic(
                "E005", ins.loc, f"returning possibly invalid Pointer from '{fn.name}'",
                _notes("return value", d.causes_of(ins.var))))
            return
        seed = self.result.inputs[self.cfg.entry]
        post = fn.post()
        if post is not None:
            cands = []
            for tok in post:
                if tok == NULL_TOKEN:
                    cands.append(frozenset({NULL}))
                elif tok == GLOBAL_TOKEN:
                    cands.append(frozenset({GLOBAL}))
                elif tok == INVALID_TOKEN:
                    cands.append(frozenset({INVALID}))
                else:
                    cands.append(seed.get(tok, frozenset()))
            if not any(ps == c for c in cands):
                want = "{" + ",".join(post) + "}"
                self.out.append(Diagnostic(
                    "E005", ins.loc,
                    f"returned pset {format_pset(ps)} violates post({fn.name},{want})"))
            return
        bad = sorted(str(e) for e in ps if not self._outlives_call(e, seed))
        if bad:
            self.out.append(Diagnostic(
                "E005", ins.loc,
                f"returned Pointer may not outlive the call to '{fn.name}': it may point to "
                + ", ".join(bad)))

    def _outlives_call(self, e, seed: Pmap) -> bool:
        if e in (NULL, GLOBAL):
            return True
        if not e.is_var:
            return False
        if e.name in self.sites:
            return True
        by_ref = {p.name for p in self.fn.params if p.by_ref}
        by_value_owner = {
            p.name for p in self.fn.params
            if not p.by_ref and self.ctx.env.resolve(p.type).kind is Kind.OWNER
        }
        if e.level == 0:
            return e.name in by_ref
        for v, ps in seed.psets.items():
            if v in by_value_owner:
                continue
            if any(x.is_var and x.name == e.name and x.level >= 1 for x in ps):
                return True
        return False


def check_function(fn: Function, cfg: Cfg, result: DataflowResult, ctx: Context,
                   opts: CheckOptions | None = None) -> list[Diagnostic]:
    return _FunctionChecker(fn, cfg, result, ctx, opts or CheckOptions()).run()


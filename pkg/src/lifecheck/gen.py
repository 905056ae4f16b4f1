"""Random well-formed programs for differential testing against the interpreter.

Generation is type-directed: a statement template is only drawn when the
variables it needs are in scope. Pointers are split into two pools so that
``delete`` is only ever applied to heap pointers, and no pointer is ever
null, which keeps every concrete memory error inside the fragment the
static rules are meant to cover.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .frontend.parser import parse_program
from .frontend.syntax import Program

FEATURES = ("moves", "heap", "calls", "loops")

HELPERS = {
    "ident": "fn ident(p: Pointer) -> Pointer {\n    return p;\n}",
    "pick": (
        "fn pick(a: Pointer, b: Pointer, c: Value) -> Pointer {\n"
        "    if (c > 0) {\n        return a;\n    }\n    return b;\n}"
    ),
    "peek": "fn peek(p: Pointer) -> Value {\n    return *p;\n}",
    "poke": "fn poke(p: Pointer, v: Value) {\n    *p = v;\n}",
    "regrow": "fn regrow(o: &Owner) {\n    deallocate(o);\n    o = allocate(2);\n}",
    "total": "fn total(o: const &Owner) -> Value {\n    return *o;\n}",
    "weigh": "fn weigh(o: Owner) -> Value {\n    return *o + 1;\n}",
}


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_statements: int = 14
    max_depth: int = 3
    features: frozenset = field(default_factory=lambda: frozenset(FEATURES))
    max_control: int = 3  # ifs and loops per program, bounds path counts
    seed_error_rate: float = 0.3

    def __post_init__(self):
        if self.max_statements < 0 or self.max_depth < 1 or self.max_control < 0:
            raise ValueError("generator limits must be positive")
        if not 0.0 <= self.seed_error_rate <= 1.0:
            raise ValueError("seed_error_rate must be a probability")
        unknown = set(self.features) - set(FEATURES)
        if unknown:
            raise ValueError(f"unknown features: {', '.join(sorted(unknown))}")


def parse_feature_mask(text: str) -> frozenset:
    """``all``, ``none`` or a comma list such as ``heap,loops``."""
    text = text.strip()
    if text == "all":
        return frozenset(FEATURES)
    if text in ("", "none"):
        return frozenset()
    out = frozenset(t.strip() for t in text.split(",") if t.strip())
    unknown = out - set(FEATURES)
    if unknown:
        raise ValueError(f"unknown features: {', '.join(sorted(unknown))}")
    return out


class _Gen:
    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.has = cfg.features.__contains__
        self.scopes: list[dict[str, list[str]]] = []
        self.counter = 0
        self.left = cfg.max_statements
        self.control = cfg.max_control
        self.helpers: set[str] = set()
        self.uses_global = False

    # -- scope bookkeeping

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    def declare(self, pool: str, name: str) -> None:
        self.scopes[-1].setdefault(pool, []).append(name)

    def pool(self, *pools: str) -> list[str]:
        return [n for s in self.scopes for p in pools for n in s.get(p, [])]

    def pick(self, *pools: str):
        names = self.pool(*pools)
        return self.rng.choice(names) if names else None

    def small(self) -> int:
        return self.rng.randint(0, 4)

    def value_expr(self) -> str:
        v = self.pick("value", "counter")
        r = self.rng.random()
        if v is None or r < 0.4:
            return str(self.small())
        if r < 0.7:
            return v
        return f"{v} {self.rng.choice('+-*')} {self.small()}"

    def pointer(self):
        """Any readable address holder: stack or heap Pointer, or an Owner."""
        return self.pick("stack", "heap", "owner")

    def helper(self, name: str) -> str:
        self.helpers.add(name)
        return name

    def address_source(self) -> str:
        """Right-hand side for a stack Pointer."""
        opts = []
        v = self.pick("value")
        if v is not None:
            opts.append(f"&{v}")
        o = self.pick("owner")
        if o is not None:
            opts.append(o)
        sp = self.pick("stack")
        if sp is not None:
            opts.append(sp)
            if self.has("calls"):
                opts.append(f"{self.helper('ident')}({sp})")
                other = self.pick("stack")
                if self.control > 0 and self.rng.random() < 0.3:
                    self.control -= 1
                    opts.append(f"{self.helper('pick')}({sp}, {other}, {self.value_expr()})")
        if not opts or self.rng.random() < 0.15:
            self.uses_global = True
            opts.append("&gv")
        return self.rng.choice(opts)

    def heap_source(self) -> str:
        hp = self.pick("heap")
        r = self.rng.random()
        if hp is None or r < 0.5:
            return f"new({self.rng.randint(1, 3)})"
        if self.has("calls") and r < 0.7:
            return f"{self.helper('ident')}({hp})"
        return hp

    # -- statements

    def templates(self, depth: int):
        t = [(3, self.decl_value)]
        if self.pool("value"):
            t.append((2, self.assign_value))
        t.append((2, self.decl_stack))
        if self.pool("stack"):
            t.append((2, self.assign_stack))
        t.append((1, self.decl_owner))
        if self.pool("owner"):
            t.append((1, self.owner_op))
        if self.has("heap"):
            t.append((1, self.decl_heap))
            if self.pool("heap"):
                t.append((2, self.heap_op))
        if self.pointer() is not None:
            t.append((3, self.read))
            t.append((3, self.write))
        if self.has("moves") and len(self.pool("owner")) >= 2:
            t.append((1, self.move))
        if self.has("calls") and (self.pointer() is not None):
            t.append((2, self.call))
        if depth < self.cfg.max_depth:
            t.append((1, self.block))
            if self.control > 0:
                t.append((2, self.if_stmt))
                if self.has("loops"):
                    t.append((2, self.loop))
        return t

    def stmt(self, depth: int) -> list[str]:
        self.left -= 1
        choices = self.templates(depth)
        total = sum(w for w, _ in choices)
        r = self.rng.uniform(0, total)
        for w, f in choices:
            r -= w
            if r <= 0:
                return f(depth)
        return choices[-1][1](depth)

    def decl_value(self, depth):
        name = self.fresh("v")
        line = f"let {name}: Value = {self.value_expr()};"
        self.declare("value", name)
        return [line]

    def assign_value(self, depth):
        return [f"{self.pick('value')} = {self.value_expr()};"]

    def decl_stack(self, depth):
        name = self.fresh("p")
        line = f"let {name}: Pointer = {self.address_source()};"
        self.declare("stack", name)
        return [line]

    def assign_stack(self, depth):
        target = self.pick("stack")
        return [f"{target} = {self.address_source()};"]

    def decl_owner(self, depth):
        name = self.fresh("o")
        self.declare("owner", name)
        return [f"let {name}: Owner;"]

    def owner_op(self, depth):
        o = self.pick("owner")
        r = self.rng.random()
        if r < 0.4:
            return [f"{o} = allocate({self.rng.randint(1, 3)});"]
        if r < 0.7:
            return [f"deallocate({o});", f"{o} = allocate({self.rng.randint(1, 3)});"]
        return [f"deallocate({o});"]

    def decl_heap(self, depth):
        name = self.fresh("h")
        line = f"let {name}: Pointer = {self.heap_source()};"
        self.declare("heap", name)
        return [line]

    def heap_op(self, depth):
        hp = self.pick("heap")
        if self.rng.random() < 0.4:
            return [f"delete {hp};"]
        return [f"{hp} = {self.heap_source()};"]

    def read(self, depth):
        p = self.pointer()
        v = self.pick("value")
        deref = f"[{p}]" if self.rng.random() < 0.3 else f"*{p}"
        if v is None:
            name = self.fresh("v")
            self.declare("value", name)
            return [f"let {name}: Value = {deref};"]
        return [f"{v} = {deref};"]

    def write(self, depth):
        p = self.pointer()
        deref = f"[{p}]" if self.rng.random() < 0.3 else f"*{p}"
        return [f"{deref} = {self.value_expr()};"]

    def move(self, depth):
        src, dst = self.rng.sample(self.pool("owner"), 2)
        return [f"{dst} = move {src};"]

    def call(self, depth):
        r = self.rng.random()
        owners = self.pool("owner")
        if owners and r < 0.35:
            o = self.rng.choice(owners)
            which = self.rng.choice(("regrow", "total", "weigh"))
            if which == "regrow":
                return [f"{self.helper('regrow')}({o});"]
            v = self.pick("value")
            call = f"{self.helper(which)}({o})"
            if v is None:
                name = self.fresh("v")
                self.declare("value", name)
                return [f"let {name}: Value = {call};"]
            return [f"{v} = {call};"]
        p = self.pick("stack", "heap")
        if p is None:
            p = self.pointer()
        if r < 0.7:
            return [f"{self.helper('poke')}({p}, {self.value_expr()});"]
        v = self.pick("value")
        if v is None:
            name = self.fresh("v")
            self.declare("value", name)
            return [f"let {name}: Value = {self.helper('peek')}({p});"]
        return [f"{v} = {self.helper('peek')}({p});"]

    def body(self, depth: int, extra: list[str] = ()) -> list[str]:
        self.scopes.append({})
        lines = []
        n = self.rng.randint(1, 3)
        while n > 0 and self.left > 0:
            lines += self.stmt(depth + 1)
            n -= 1
        lines += list(extra)
        self.scopes.pop()
        return ["    " + l for l in lines]

    def block(self, depth):
        return ["{", *self.body(depth), "}"]

    def cond(self) -> str:
        v = self.pick("value", "counter")
        if v is None:
            return f"{self.small()} < {self.small()}"
        return f"{v} {self.rng.choice(('<', '>', '==', '!='))} {self.small()}"

    def if_stmt(self, depth):
        self.control -= 1
        lines = [f"if ({self.cond()}) {{"]
        tail = ["return;"] if self.rng.random() < 0.1 else []
        lines += self.body(depth, tail)
        if self.rng.random() < 0.5:
            lines += ["} else {", *self.body(depth)]
        return lines + ["}"]

    def loop(self, depth):
        self.control -= 1
        i = self.fresh("i")
        out = [f"let {i}: Value = 0;", f"while ({i} < {self.rng.randint(1, 3)}) {{"]
        self.declare("counter", i)
        out += self.body(depth, [f"{i} = {i} + 1;"])
        return out + ["}"]

    # -- error seeding

    def seeded(self) -> list[str]:
        kinds = ["stack", "owner"]
        if self.has("heap"):
            kinds.append("heap")
        if self.has("moves"):
            kinds.append("move")
        if self.has("calls"):
            kinds.append("regrow")
        kind = self.rng.choice(kinds)
        v = self.fresh("v")
        p = self.fresh("p")
        self.declare("value", v)
        if kind == "stack":
            y = self.fresh("v")
            return [f"let {v}: Value = 1;", f"let {p}: Pointer = &{v};",
                    "{", f"    let {y}: Value = 2;", f"    {p} = &{y};", "}", f"{v} = *{p};"]
        o = self.fresh("o")
        if kind == "owner":
            return [f"let {v}: Value = 1;", f"let {o}: Owner;", f"let {p}: Pointer = {o};",
                    f"deallocate({o});", f"{v} = *{p};"]
        if kind == "heap":
            return [f"let {v}: Value = 1;", f"let {p}: Pointer = new(1);", f"delete {p};",
                    f"*{p} = {v};"]
        if kind == "move":
            o2 = self.fresh("o")
            return [f"let {v}: Value = 1;", f"let {o}: Owner;", f"let {o2}: Owner;",
                    f"{o2} = move {o};", f"{v} = *{o};"]
        self.helpers.add("regrow")
        return [f"let {v}: Value = 1;", f"let {o}: Owner;", f"let {p}: Pointer = {o};",
                f"regrow({o});", f"*{p} = {v};"]

    def main(self) -> list[str]:
        self.scopes.append({})
        lines: list[str] = []
        seed_at = -1
        if self.cfg.max_statements > 0 and self.rng.random() < self.cfg.seed_error_rate:
            seed_at = self.rng.randint(0, self.cfg.max_statements - 1)
        k = 0
        while self.left > 0:
            if k == seed_at:
                lines += self.seeded()
            lines += self.stmt(0)
            k += 1
        if seed_at >= k:
            lines += self.seeded()
        self.scopes.pop()
        return lines


def generate_source(cfg: GenConfig) -> str:
    g = _Gen(cfg)
    body = g.main()
    parts = []
    if g.uses_global:
        parts.append("global gv: Value;")
    parts += [HELPERS[h] for h in HELPERS if h in g.helpers]
    parts.append("fn main() {\n" + "".join(f"    {l}\n" for l in body) + "}")
    return "\n\n".join(parts) + "\n"


def generate(cfg: GenConfig) -> Program:
    """A parsed program; a pure function of ``cfg``."""
    return parse_program(generate_source(cfg), f"<gen:{cfg.seed}>")

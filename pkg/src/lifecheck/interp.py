"""Concrete small-step interpreter used as the ground-truth oracle.

State is a store (variable -> address) per active call plus one shared
memory (address -> value) and a table of allocated blocks. Lookups,
mutations and deallocations through addresses outside the memory end the
run in an error configuration.

Programs are run after scope lowering and heap desugaring, so ``let``,
``new`` and ``delete`` never reach the machine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .frontend.printer import format_stmt
from .frontend.syntax import (
    AddressOf, Allocate, Assign, BinOp, Block, Call, Create, Deallocate, Deref,
    Destroy, ExprStmt, If, IncDec, Index, IntLit, Kind, MoveOf, Name,
    NullLit, Program, Return, SourceLoc, Stmt, UnaryOp, While,
)
from .typeclass import TypeEnv

DEFAULT_MAX_STEPS = 100_000
MAX_CALL_DEPTH = 200
MAX_BLOCK = 1 << 16


class _NullAtom:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "null"


NULL = _NullAtom()


@dataclass(frozen=True, order=True)
class Addr:
    n: int

    def __repr__(self) -> str:
        return f"a{self.n}"


Value = Union[int, _NullAtom, Addr]


@dataclass
class ConcreteState:
    memory: dict[Addr, Value] = field(default_factory=dict)
    blocks: dict[Addr, int] = field(default_factory=dict)
    next_fresh: int = 0
    globals: dict[str, Addr] = field(default_factory=dict)
    frames: list[dict[str, Addr]] = field(default_factory=lambda: [{}])

    @property
    def store(self) -> dict[str, Addr]:
        """Bindings of the innermost active call."""
        return self.frames[-1]

    def lookup_var(self, name: str) -> Optional[Addr]:
        a = self.frames[-1].get(name)
        return a if a is not None else self.globals.get(name)

    def fresh(self, count: int = 1) -> Addr:
        # addresses are never reused, so a fresh run is always outside dom(memory)
        a = Addr(self.next_fresh)
        self.next_fresh += count
        return a

    def copy(self) -> ConcreteState:
        return ConcreteState(
            dict(self.memory), dict(self.blocks), self.next_fresh, dict(self.globals),
            [dict(f) for f in self.frames],
        )


# -------------------------------------------------------------- configurations


@dataclass
class Nonterminal:
    stmt: Stmt
    state: ConcreteState


@dataclass
class Terminal:
    state: ConcreteState
    value: Optional[Value] = None


MEMORY_ERRORS = ("lookup", "mutation", "deallocate")


@dataclass(frozen=True)
class ErrorConfig:
    loc: SourceLoc
    reason: str
    kind: str  # "lookup", "mutation", "deallocate" or "other"
    stmt_loc: Optional[SourceLoc] = None
    stack: tuple[SourceLoc, ...] = ()  # call sites, outermost first

    @property
    def is_memory_error(self) -> bool:
        return self.kind in MEMORY_ERRORS

    def lines(self) -> set[int]:
        out = {self.loc.line}
        if self.stmt_loc is not None:
            out.add(self.stmt_loc.line)
        out.update(l.line for l in self.stack)
        return out

    def __str__(self) -> str:
        return f"{self.loc}: runtime error ({self.kind}): {self.reason}"


@dataclass(frozen=True)
class LimitExceeded:
    steps: int
    reason: str = "step budget exhausted"


Outcome = Union[Terminal, ErrorConfig, LimitExceeded]


class _Fail(Exception):
    def __init__(self, err: ErrorConfig):
        self.err = err


class _Limit(Exception):
    def __init__(self, reason: str):
        self.reason = reason


class _Return(Exception):
    def __init__(self, value: Optional[Value]):
        self.value = value


def truthy(v: Value) -> bool:
    if isinstance(v, int):
        return v != 0
    return isinstance(v, Addr)


# Chooser: (kind, loc, concrete truth value) -> branch taken, or None to
# stop the loop. ``kind`` is "if" or "while".
Chooser = Callable[[str, SourceLoc, bool], bool]


def concrete_chooser(kind: str, loc: SourceLoc, value: bool) -> bool:
    return value


class Machine:
    def __init__(self, program: Program, env: TypeEnv | None = None,
                 max_steps: int = DEFAULT_MAX_STEPS, chooser: Chooser = concrete_chooser,
                 trace: Optional[Callable[[str], None]] = None):
        self.program = program
        self.env = env if env is not None else TypeEnv()
        self.max_steps = max_steps
        self.steps = 0
        self.chooser = chooser
        self.trace = trace
        self.state = ConcreteState()
        self.calls: list[SourceLoc] = []
        self.stmt_loc: Optional[SourceLoc] = None

    # -- errors and bookkeeping

    def fail(self, loc: SourceLoc, reason: str, kind: str = "other"):
        raise _Fail(ErrorConfig(loc, reason, kind, self.stmt_loc, tuple(self.calls)))

    def tick(self, stmt=None):
        if self.steps >= self.max_steps:
            raise _Limit("step budget exhausted")
        self.steps += 1
        if self.trace is not None and stmt is not None:
            text = format_stmt(stmt)[0].strip() if not isinstance(stmt, (If, While, Block)) else type(stmt).__name__.lower()
            self.trace(f"{stmt.loc}: {text}")

    def kind_of(self, t) -> Kind:
        return self.env.resolve(t).kind

    # -- memory primitives

    def alloc_block(self, size: int) -> Addr:
        a = self.state.fresh(size)
        for k in range(size):
            self.state.memory[Addr(a.n + k)] = NULL
        self.state.blocks[a] = size
        return a

    def free_block(self, a: Addr) -> None:
        size = self.state.blocks.pop(a)
        for k in range(size):
            self.state.memory.pop(Addr(a.n + k), None)

    def new_cell(self, init: Value = NULL) -> Addr:
        a = self.state.fresh()
        self.state.memory[a] = init
        return a

    def cell(self, name: str, loc: SourceLoc) -> Addr:
        a = self.state.lookup_var(name)
        if a is None or a not in self.state.memory:
            self.fail(loc, f"variable {name!r} is not alive")
        return a

    def load(self, addr: Value, loc: SourceLoc) -> Value:
        if not isinstance(addr, Addr) or addr not in self.state.memory:
            self.fail(loc, f"lookup of {addr!r}, which is not in dom(m)", "lookup")
        return self.state.memory[addr]

    def store_at(self, addr: Value, v: Value, loc: SourceLoc) -> None:
        if not isinstance(addr, Addr) or addr not in self.state.memory:
            self.fail(loc, f"mutation of {addr!r}, which is not in dom(m)", "mutation")
        self.state.memory[addr] = v

    def make_owner(self) -> Addr:
        return self.new_cell(self.alloc_block(1))

    # -- expressions

    def eval(self, e) -> Value:
        loc = e.loc
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, NullLit):
            return NULL
        if isinstance(e, Name):
            return self.state.memory[self.cell(e.id, loc)]
        if isinstance(e, AddressOf):
            return self.cell(e.name, loc)
        if isinstance(e, MoveOf):
            a = self.cell(e.name, loc)
            v = self.state.memory[a]
            self.state.memory[a] = NULL
            return v
        if isinstance(e, Deref):
            return self.load(self.eval(e.operand), loc)
        if isinstance(e, Index):
            return self.load(self.address_of_index(e), loc)
        if isinstance(e, BinOp):
            a = self.eval(e.lhs)
            b = self.eval(e.rhs)
            return self.binop(e.op, a, b, loc)
        if isinstance(e, UnaryOp):
            v = self.eval(e.operand)
            if e.op == "!":
                return 0 if truthy(v) else 1
            n = self.number(v, loc)
            return -n
        if isinstance(e, IncDec):
            return self.incdec(e)
        if isinstance(e, Call):
            return self.call(e)
        self.fail(loc, f"cannot evaluate {type(e).__name__} here")

    def number(self, v: Value, loc: SourceLoc) -> int:
        if v is NULL:
            return 0
        if isinstance(v, int):
            return v
        self.fail(loc, "address used as a number")

    def binop(self, op: str, a: Value, b: Value, loc: SourceLoc) -> Value:
        if op in ("&&", "||"):
            return int(truthy(a) and truthy(b)) if op == "&&" else int(truthy(a) or truthy(b))
        if op in ("==", "!="):
            norm_a = 0 if a is NULL else a
            norm_b = 0 if b is NULL else b
            return int((norm_a == norm_b) == (op == "=="))
        if isinstance(a, Addr) or isinstance(b, Addr):
            if op == "+" and isinstance(a, Addr) and not isinstance(b, Addr):
                return Addr(a.n + self.number(b, loc))
            if op == "+" and isinstance(b, Addr) and not isinstance(a, Addr):
                return Addr(b.n + self.number(a, loc))
            if op == "-" and isinstance(a, Addr) and not isinstance(b, Addr):
                return Addr(a.n - self.number(b, loc))
            if op == "-" and isinstance(a, Addr) and isinstance(b, Addr):
                return a.n - b.n
            if op in ("<", ">", "<=", ">=") and isinstance(a, Addr) and isinstance(b, Addr):
                a, b = a.n, b.n
            else:
                self.fail(loc, f"operator {op!r} applied to an address")
        x, y = self.number(a, loc), self.number(b, loc)
        if op == "+":
            return x + y
        if op == "-":
            return x - y
        if op == "*":
            return x * y
        if op in ("/", "%"):
            if y == 0:
                self.fail(loc, "division by zero")
            q = abs(x) // abs(y) * (1 if (x >= 0) == (y >= 0) else -1)
            return q if op == "/" else x - q * y
        if op == "<":
            return int(x < y)
        if op == ">":
            return int(x > y)
        if op == "<=":
            return int(x <= y)
        if op == ">=":
            return int(x >= y)
        self.fail(loc, f"unknown operator {op!r}")

    def address_of_index(self, e: Index) -> Value:
        return self.binop("+", self.eval(e.base), self.eval(e.index), e.loc)

    def lvalue(self, e) -> tuple[Value, bool]:
        """Address designated by an assignable expression; the flag marks variables."""
        if isinstance(e, Name):
            return self.cell(e.id, e.loc), True
        if isinstance(e, Deref):
            return self.eval(e.operand), False
        if isinstance(e, Index):
            return self.address_of_index(e), False
        self.fail(e.loc, "expression is not assignable")

    def incdec(self, e: IncDec) -> Value:
        addr, _ = self.lvalue(e.operand)
        old = self.load(addr, e.loc)
        delta = 1 if e.op == "++" else -1
        new = self.binop("+", old, delta, e.loc) if isinstance(old, Addr) else self.number(old, e.loc) + delta
        self.store_at(addr, new, e.loc)
        return new if e.prefix else old

    def call(self, c: Call) -> Optional[Value]:
        fn = self.program.function(c.callee)
        if fn is None or fn.body is None:
            self.fail(c.loc, f"call to {c.callee!r}, which has no body")
        if len(self.calls) >= MAX_CALL_DEPTH:
            raise _Limit("call depth exhausted")
        frame: dict[str, Addr] = {}
        pending = []
        for p, a in zip(fn.params, c.args):
            if p.by_ref:
                frame[p.name] = self.cell(a.id, a.loc)
                continue
            v = self.eval(a)
            if self.kind_of(p.type) is Kind.OWNER and not isinstance(a, MoveOf):
                v = self.copy_owned(v, a.loc)
            pending.append((p.name, v))
        for name, v in pending:
            frame[name] = self.new_cell(v)
        self.calls.append(c.loc)
        self.state.frames.append(frame)
        saved = self.stmt_loc
        try:
            self.block(fn.body)
            result = None
        except _Return as r:
            result = r.value
        finally:
            self.state.frames.pop()
            self.calls.pop()
            self.stmt_loc = saved
        return result

    def copy_owned(self, v: Value, loc: SourceLoc) -> Value:
        """Copying an Owner duplicates the block it owns."""
        if v is NULL:
            return self.alloc_block(1)
        if not isinstance(v, Addr) or v not in self.state.blocks or v not in self.state.memory:
            self.fail(loc, f"copy of an Owner whose memory {v!r} is not allocated", "lookup")
        size = self.state.blocks[v]
        new = self.alloc_block(size)
        for k in range(size):
            self.state.memory[Addr(new.n + k)] = self.state.memory[Addr(v.n + k)]
        return new

    # -- statements

    def exec(self, s: Stmt) -> None:
        self.stmt_loc = s.loc
        self.tick(s)
        if isinstance(s, Create):
            a = self.make_owner() if self.kind_of(s.type) is Kind.OWNER else self.new_cell()
            self.state.store[s.name] = a
        elif isinstance(s, Destroy):
            a = self.state.store.pop(s.name, None)
            if a is None:
                self.fail(s.loc, f"destroy of {s.name!r}, which is not alive")
            self.state.memory.pop(a, None)
        elif isinstance(s, Deallocate):
            v = self.eval(s.operand)
            if isinstance(v, Addr) and v in self.state.blocks and v in self.state.memory:
                self.free_block(v)
            elif not s.implicit:
                self.fail(s.loc, f"deallocate({v!r}): not the first address of a live block", "deallocate")
        elif isinstance(s, Assign):
            self.assign(s)
        elif isinstance(s, ExprStmt):
            self.eval(s.expr)
        elif isinstance(s, Block):
            self.block(s)
        elif isinstance(s, If):
            c = truthy(self.eval(s.cond))
            if self.chooser("if", s.loc, c):
                self.block(s.then)
            elif s.orelse is not None:
                self.block(s.orelse)
        elif isinstance(s, While):
            while True:
                self.stmt_loc = s.loc
                c = truthy(self.eval(s.cond))
                if not self.chooser("while", s.loc, c):
                    break
                self.block(s.body)
                self.tick()
        elif isinstance(s, Return):
            v = self.eval(s.value) if s.value is not None else None
            for c in s.cleanup:
                self.exec(c)
            raise _Return(v)
        else:
            self.fail(s.loc, f"cannot execute {type(s).__name__}")

    def assign(self, s: Assign) -> None:
        t, e = s.target, s.value
        if isinstance(e, Allocate):
            n = self.eval(e.size)
            if not isinstance(n, int) or not 1 <= n <= MAX_BLOCK:
                self.fail(e.loc, f"allocate({n!r}): size must be between 1 and {MAX_BLOCK}")
            block = self.alloc_block(n)
            self.state.memory[self.cell(t.id, t.loc)] = block
            return
        addr, is_var = self.lvalue(t)
        v = self.eval(e)
        if s.op != "=":
            old = self.load(addr, s.loc)
            v = self.binop(s.op[0], old, v, s.loc)
        if is_var:
            self.state.memory[addr] = v
        else:
            self.store_at(addr, v, s.loc)

    def block(self, b: Block) -> None:
        for s in b.stmts:
            self.exec(s)

    # -- entry points

    def init_globals(self) -> None:
        for g in self.program.globals:
            a = self.make_owner() if self.kind_of(g.type) is Kind.OWNER else self.new_cell()
            self.state.globals[g.name] = a

    def run_function(self, entry: str = "main") -> Outcome:
        fn = self.program.function(entry)
        if fn is None or fn.body is None:
            return ErrorConfig(self.program.loc, f"no function {entry!r} with a body", "other")
        if fn.params:
            return ErrorConfig(fn.loc, f"entry function {entry!r} must take no parameters", "other")
        try:
            self.init_globals()
            try:
                self.block(fn.body)
                value = None
            except _Return as r:
                value = r.value
        except _Fail as f:
            return f.err
        except _Limit as lim:
            return LimitExceeded(self.steps, lim.reason)
        return Terminal(self.state, value)

    def step(self, config: Nonterminal) -> Union[Terminal, ErrorConfig, LimitExceeded]:
        """One transition: execute ``config.stmt`` on a copy of ``config.state``."""
        self.state = config.state.copy()
        try:
            self.exec(config.stmt)
        except _Fail as f:
            return f.err
        except _Limit as lim:
            return LimitExceeded(self.steps, lim.reason)
        except _Return as r:
            return Terminal(self.state, r.value)
        return Terminal(self.state)


def step(config: Nonterminal, program: Program | None = None, env: TypeEnv | None = None) -> Outcome:
    return Machine(program or Program(), env).step(config)


def prepare(program: Program, env: TypeEnv | None = None) -> Program:
    """Lower scopes and heap operations so the machine can run the program."""
    from .normalize.lower import desugar_heap, lower_scopes
    return desugar_heap(lower_scopes(program, env))


def forced_chooser(choices) -> Chooser:
    """Take branch decisions from ``choices`` in order, then fall back to the real condition."""
    pending = list(choices)

    def choose(kind: str, loc: SourceLoc, value: bool) -> bool:
        return pending.pop(0) if pending else value
    return choose


def run(program: Program, entry: str = "main", max_steps: int = DEFAULT_MAX_STEPS,
        env: TypeEnv | None = None, trace: Optional[Callable[[str], None]] = None,
        lowered: bool = False, choices=()) -> Outcome:
    prog = program if lowered else prepare(program, env)
    chooser = forced_chooser(choices) if choices else concrete_chooser
    return Machine(prog, env, max_steps, chooser=chooser, trace=trace).run_function(entry)


# ------------------------------------------------------------ path enumeration


@dataclass(frozen=True)
class PathOutcome:
    choices: tuple[bool, ...]
    outcome: Outcome


@dataclass
class PathSet:
    paths: list[PathOutcome]
    incomplete: bool = False

    def errors(self) -> list[ErrorConfig]:
        return [p.outcome for p in self.paths if isinstance(p.outcome, ErrorConfig)]

    def __len__(self) -> int:
        return len(self.paths)


class _Replay:
    def __init__(self, prefix: tuple[bool, ...], max_depth: int, max_unrolls: int):
        self.prefix = prefix
        self.max_depth = max_depth
        self.max_unrolls = max_unrolls
        self.taken: list[bool] = []
        self.truncated = False
        self.loop_counts: dict[int, int] = {}

    def __call__(self, kind: str, loc: SourceLoc, value: bool) -> bool:
        if kind == "while":
            key = id(loc)
            count = self.loop_counts.get(key, 0)
            if count >= self.max_unrolls:
                self.loop_counts[key] = 0
                return False
        k = len(self.taken)
        if k < len(self.prefix):
            choice = self.prefix[k]
        elif k >= self.max_depth:
            self.truncated = True
            if kind == "while":
                self.loop_counts[id(loc)] = 0
            return False
        else:
            choice = False
        self.taken.append(choice)
        if kind == "while":
            self.loop_counts[id(loc)] = self.loop_counts.get(id(loc), 0) + 1 if choice else 0
        return choice


def enumerate_paths(program: Program, entry: str = "main", max_branch_depth: int = 16,
                    max_loop_unrolls: int = 2, max_paths: int = 4096,
                    max_steps: int = DEFAULT_MAX_STEPS, env: TypeEnv | None = None,
                    lowered: bool = False) -> PathSet:
    """Run every resolution of the branch conditions, treated as free choices.

    Each loop condition may come out true at most ``max_loop_unrolls`` times
    in a row; past ``max_branch_depth`` choices, or ``max_paths`` runs, the
    remaining alternatives are dropped and the set is flagged incomplete.
    """
    prog = program if lowered else prepare(program, env)
    out = PathSet([])
    todo: list[tuple[bool, ...]] = [()]
    while todo:
        if len(out.paths) >= max_paths:
            out.incomplete = True
            break
        prefix = todo.pop()
        chooser = _Replay(prefix, max_branch_depth, max_loop_unrolls)
        outcome = Machine(prog, env, max_steps, chooser=chooser).run_function(entry)
        out.incomplete |= chooser.truncated
        taken = tuple(chooser.taken)
        out.paths.append(PathOutcome(taken, outcome))
        for k in range(len(taken) - 1, len(prefix) - 1, -1):
            todo.append(taken[:k] + (not taken[k],))
    return out

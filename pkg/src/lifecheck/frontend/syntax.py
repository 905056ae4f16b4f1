"""Syntax tree for `.lt` lifetime programs.

Every node carries a :class:`SourceLoc`. Locations never take part in
equality, so two trees parsed from differently formatted text compare
equal when their structure matches.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True, order=True)
class SourceLoc:
    file: str
    line: int
    column: int

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid source location {self.line}:{self.column}")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


NOWHERE = SourceLoc("<builtin>", 1, 1)


class Kind(enum.Enum):
    OWNER = "Owner"
    POINTER = "Pointer"
    VALUE = "Value"


@dataclass(frozen=True)
class TypeClass:
    """Owner, Pointer or Value, optionally const."""

    kind: Kind
    const: bool = False

    @property
    def is_owner(self) -> bool:
        return self.kind is Kind.OWNER

    @property
    def is_pointer(self) -> bool:
        return self.kind is Kind.POINTER

    @property
    def is_value(self) -> bool:
        return self.kind is Kind.VALUE

    def __str__(self) -> str:
        return ("const " if self.const else "") + self.kind.value


OWNER = TypeClass(Kind.OWNER)
POINTER = TypeClass(Kind.POINTER)
VALUE = TypeClass(Kind.VALUE)

BUILTIN_CLASSES = {k.value: k for k in Kind}

# Lifetime tokens are parameter names or one of these keywords.
LifetimeToken = str
NULL_TOKEN = "null"
GLOBAL_TOKEN = "global"
INVALID_TOKEN = "invalid"
SPECIAL_TOKENS = frozenset({NULL_TOKEN, GLOBAL_TOKEN, INVALID_TOKEN})


@dataclass(frozen=True)
class Node:
    loc: SourceLoc = field(default=NOWHERE, compare=False, kw_only=True, repr=False)


@dataclass(frozen=True)
class TypeRef(Node):
    """A written type: a builtin class name or a type named in the facts file."""

    name: str
    const: bool = False


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Name(Node):
    id: str


@dataclass(frozen=True)
class IntLit(Node):
    value: int


@dataclass(frozen=True)
class NullLit(Node):
    pass


@dataclass(frozen=True)
class AddressOf(Node):
    name: str


@dataclass(frozen=True)
class Deref(Node):
    """`*e`, or `[e]` when ``bracket`` is set."""

    operand: Expr
    bracket: bool = False


@dataclass(frozen=True)
class MoveOf(Node):
    name: str


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class UnaryOp(Node):
    op: str
    operand: Expr


@dataclass(frozen=True)
class IncDec(Node):
    op: str  # "++" or "--"
    prefix: bool
    operand: Expr


@dataclass(frozen=True)
class Index(Node):
    base: Expr
    index: Expr


@dataclass(frozen=True)
class Call(Node):
    callee: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Allocate(Node):
    size: Expr


@dataclass(frozen=True)
class New(Node):
    size: Expr


Expr = Union[
    Name, IntLit, NullLit, AddressOf, Deref, MoveOf, BinOp, UnaryOp, IncDec,
    Index, Call, Allocate, New,
]


# ----------------------------------------------------------------- statements


@dataclass(frozen=True)
class Let(Node):
    name: str
    type: TypeRef
    init: Optional[Expr] = None


@dataclass(frozen=True)
class Create(Node):
    name: str
    type: TypeRef


@dataclass(frozen=True)
class Destroy(Node):
    name: str


@dataclass(frozen=True)
class Deallocate(Node):
    """`deallocate(e);`. Implicit ones are scope-exit releases of Owners."""

    operand: Expr
    implicit: bool = False


@dataclass(frozen=True)
class Delete(Node):
    operand: Expr


@dataclass(frozen=True)
class Assign(Node):
    target: Expr
    value: Expr
    op: str = "="


@dataclass(frozen=True)
class ExprStmt(Node):
    expr: Expr


@dataclass(frozen=True)
class Block(Node):
    stmts: tuple[Stmt, ...] = ()
    end: SourceLoc = field(default=NOWHERE, compare=False, kw_only=True, repr=False)


@dataclass(frozen=True)
class If(Node):
    cond: Expr
    then: Block
    orelse: Optional[Block] = None


@dataclass(frozen=True)
class While(Node):
    cond: Expr
    body: Block


@dataclass(frozen=True)
class Return(Node):
    """``cleanup`` is filled in by scope lowering and runs after the value is computed."""

    value: Optional[Expr] = None
    cleanup: tuple[Stmt, ...] = ()


Stmt = Union[Let, Create, Destroy, Deallocate, Delete, Assign, ExprStmt, Block, If, While, Return]


# ------------------------------------------------------------------ top level


@dataclass(frozen=True)
class Annotation(Node):
    kind: str  # "pre" or "post"
    target: str
    lifetimes: tuple[LifetimeToken, ...]


@dataclass(frozen=True)
class Param(Node):
    name: str
    type: TypeRef
    by_ref: bool = False


@dataclass(frozen=True)
class Function(Node):
    name: str
    params: tuple[Param, ...] = ()
    ret: Optional[TypeRef] = None
    annotations: tuple[Annotation, ...] = ()
    body: Optional[Block] = None  # None for extern declarations

    @property
    def is_extern(self) -> bool:
        return self.body is None

    def param(self, name: str) -> Optional[Param]:
        for p in self.params:
            if p.name == name:
                return p
        return None

    def pre(self) -> dict[str, tuple[LifetimeToken, ...]]:
        return {a.target: a.lifetimes for a in self.annotations if a.kind == "pre"}

    def post(self) -> Optional[tuple[LifetimeToken, ...]]:
        for a in self.annotations:
            if a.kind == "post":
                return a.lifetimes
        return None


@dataclass(frozen=True)
class Global(Node):
    name: str
    type: TypeRef


@dataclass(frozen=True)
class Expectation(Node):
    """An `// expect-error@+N: CODE` (or `known-fp`) comment, resolved to its target line."""

    kind: str  # "expect-error" or "known-fp"
    line: int
    code: str
    note: str = ""


@dataclass(frozen=True)
class Program(Node):
    globals: tuple[Global, ...] = ()
    functions: tuple[Function, ...] = ()
    expectations: tuple[Expectation, ...] = field(default=(), compare=False)
    bad_trivia: tuple[tuple[SourceLoc, str], ...] = field(default=(), compare=False)

    def function(self, name: str) -> Optional[Function]:
        for f in self.functions:
            if f.name == name:
                return f
        return None


def walk_expr(e: Expr):
    """Yield ``e`` and every sub-expression, pre-order."""
    yield e
    if isinstance(e, (Deref, UnaryOp, IncDec)):
        yield from walk_expr(e.operand)
    elif isinstance(e, BinOp):
        yield from walk_expr(e.lhs)
        yield from walk_expr(e.rhs)
    elif isinstance(e, Index):
        yield from walk_expr(e.base)
        yield from walk_expr(e.index)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk_expr(a)
    elif isinstance(e, (Allocate, New)):
        yield from walk_expr(e.size)


def stmt_exprs(s: Stmt) -> list[Expr]:
    """Top-level expressions held directly by a statement (not nested blocks)."""
    if isinstance(s, Let):
        return [s.init] if s.init is not None else []
    if isinstance(s, (Deallocate, Delete)):
        return [s.operand]
    if isinstance(s, Assign):
        return [s.target, s.value]
    if isinstance(s, ExprStmt):
        return [s.expr]
    if isinstance(s, (If, While)):
        return [s.cond]
    if isinstance(s, Return):
        return [s.value] if s.value is not None else []
    return []


def walk_stmts(block: Block):
    """Yield every statement in ``block``, descending into nested blocks."""
    for s in block.stmts:
        yield s
        if isinstance(s, Block):
            yield from walk_stmts(s)
        elif isinstance(s, If):
            yield from walk_stmts(s.then)
            if s.orelse is not None:
                yield from walk_stmts(s.orelse)
        elif isinstance(s, While):
            yield from walk_stmts(s.body)
        elif isinstance(s, Return):
            yield from s.cleanup

"""Primitive instructions: one per CFG node, all operands plain variable names."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..frontend.syntax import NOWHERE, Kind, SourceLoc


@dataclass(frozen=True)
class _Instr:
    loc: SourceLoc = field(default=NOWHERE, compare=False, kw_only=True)


@dataclass(frozen=True)
class Create(_Instr):
    var: str
    kind: Kind


@dataclass(frozen=True)
class Destroy(_Instr):
    var: str


@dataclass(frozen=True)
class AllocAssign(_Instr):
    """``var = allocate(size)``; ``site`` names the allocation-site owner."""

    var: str
    size: Optional[str]
    site: str


@dataclass(frozen=True)
class Dealloc(_Instr):
    var: str
    implicit: bool = False
    text: str = ""


@dataclass(frozen=True)
class Copy(_Instr):
    dst: str
    src: str


@dataclass(frozen=True)
class MoveAssign(_Instr):
    dst: str
    src: str


@dataclass(frozen=True)
class TakeAddress(_Instr):
    dst: str
    var: str


@dataclass(frozen=True)
class DerefRead(_Instr):
    """``dst = [src]``; ``text`` is the dereferenced expression as written."""

    dst: str
    src: str
    text: str = ""


@dataclass(frozen=True)
class DerefWrite(_Instr):
    """``[dst] = src``; ``src`` is None when the stored value is irrelevant."""

    dst: str
    src: Optional[str]
    text: str = ""


@dataclass(frozen=True)
class OwnerUse(_Instr):
    owner: str
    const: bool = False
    why: str = ""


@dataclass(frozen=True)
class CallInstr(_Instr):
    """``result = callee(args)``. ``check_node`` is the node holding the pre-call state."""

    result: Optional[str]
    callee: str
    args: tuple[str, ...] = ()
    check_node: int = -1
    texts: tuple[str, ...] = ()


@dataclass(frozen=True)
class ReturnInstr(_Instr):
    var: Optional[str] = None


@dataclass(frozen=True)
class Nop(_Instr):
    label: str = ""


@dataclass(frozen=True)
class Const(_Instr):
    """``dst = literal``; ``value`` None stands for null."""

    dst: str
    value: Optional[int]


@dataclass(frozen=True)
class Compute(_Instr):
    """``dst = op(srcs)`` for arithmetic, comparison and logic operators."""

    dst: str
    op: str
    srcs: tuple[str, ...]


Instr = Union[
    Create, Destroy, AllocAssign, Dealloc, Copy, MoveAssign, TakeAddress,
    DerefRead, DerefWrite, OwnerUse, CallInstr, ReturnInstr, Nop, Const, Compute,
]


def format_instr(i: Instr) -> str:
    if isinstance(i, Create):
        return f"create({i.var}, {i.kind.value})"
    if isinstance(i, Destroy):
        return f"destroy({i.var})"
    if isinstance(i, AllocAssign):
        return f"{i.var} = allocate({i.size or ''})  [{i.site}]"
    if isinstance(i, Dealloc):
        return f"deallocate({i.var})" + ("  [scope exit]" if i.implicit else "")
    if isinstance(i, Copy):
        return f"{i.dst} = {i.src}"
    if isinstance(i, MoveAssign):
        return f"{i.dst} = move {i.src}"
    if isinstance(i, TakeAddress):
        return f"{i.dst} = &{i.var}"
    if isinstance(i, DerefRead):
        return f"{i.dst} = [{i.src}]"
    if isinstance(i, DerefWrite):
        return f"[{i.dst}] = {i.src if i.src is not None else '_'}"
    if isinstance(i, OwnerUse):
        return f"use({i.owner}{', const' if i.const else ''})"
    if isinstance(i, CallInstr):
        call = f"{i.callee}({', '.join(i.args)})"
        return f"{i.result} = {call}" if i.result else call
    if isinstance(i, ReturnInstr):
        return f"return {i.var}" if i.var else "return"
    if isinstance(i, Nop):
        return f"nop {i.label}".rstrip()
    if isinstance(i, Const):
        return f"{i.dst} = {'null' if i.value is None else i.value}"
    if isinstance(i, Compute):
        if len(i.srcs) == 1:
            return f"{i.dst} = {i.op}{i.srcs[0]}"
        return f"{i.dst} = {f' {i.op} '.join(i.srcs)}"
    raise TypeError(f"not an instruction: {i!r}")


@dataclass
class Cfg:
    function: str
    nodes: list[Instr]
    succs: list[list[int]]
    entry: int = 0
    # variable -> class for every name the instructions mention, temps included
    kinds: dict[str, Kind] = field(default_factory=dict)
    # constness of declared variables (locals, params, globals)
    const: dict[str, bool] = field(default_factory=dict)
    globals: frozenset[str] = frozenset()

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a, ss in enumerate(self.succs) for b in ss]

    @property
    def exits(self) -> list[int]:
        return [n for n, s in enumerate(self.succs) if not s]

    def preds(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.nodes]
        for a, ss in enumerate(self.succs):
            for b in ss:
                out[b].append(a)
        return out

    def __len__(self) -> int:
        return len(self.nodes)

    def is_acyclic(self) -> bool:
        state = [0] * len(self.nodes)
        stack = [(self.entry, iter(self.succs[self.entry]))]
        state[self.entry] = 1
        while stack:
            n, it = stack[-1]
            m = next(it, None)
            if m is None:
                state[n] = 2
                stack.pop()
            elif state[m] == 1:
                return False
            elif state[m] == 0:
                state[m] = 1
                stack.append((m, iter(self.succs[m])))
        return True

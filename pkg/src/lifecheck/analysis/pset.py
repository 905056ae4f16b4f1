"""Points-to sets and points-to maps (the abstract domain).

A pset entry is one of ``x@k`` (level 0: the address of variable ``x``;
level k >= 1: the object owned k steps below ``x``), ``null``, ``global`` or
``invalid``. A pmap maps each live variable to its pset and remembers,
for variables whose pset holds ``invalid``, where that happened.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from ..frontend.syntax import SourceLoc

MAX_LEVEL = 3


@dataclass(frozen=True, order=True)
class PsetEntry:
    kind: str  # "var", "null", "global" or "invalid"
    name: str = ""
    level: int = 0

    def __post_init__(self):
        if not 0 <= self.level <= MAX_LEVEL:
            raise ValueError(f"pset level {self.level} out of range")

    def __str__(self) -> str:
        if self.kind == "var":
            return f"{self.name}@{self.level}"
        return self.kind

    @property
    def is_var(self) -> bool:
        return self.kind == "var"


NULL = PsetEntry("null")
GLOBAL = PsetEntry("global")
INVALID = PsetEntry("invalid")


def var(name: str, level: int = 0) -> PsetEntry:
    return PsetEntry("var", name, min(level, MAX_LEVEL))


def family(name: str, min_level: int = 0) -> frozenset[PsetEntry]:
    return frozenset(var(name, k) for k in range(min_level, MAX_LEVEL + 1))


def parse_entry(text: str) -> PsetEntry:
    if text in ("null", "global", "invalid"):
        return PsetEntry(text)
    name, _, level = text.rpartition("@")
    return var(name, int(level))


def format_pset(ps: Iterable[PsetEntry]) -> str:
    return "{" + ", ".join(sorted(str(e) for e in ps)) + "}"


Pset = frozenset  # of PsetEntry


@dataclass(frozen=True)
class Cause:
    """Where and why a pset picked up ``invalid``."""

    loc: SourceLoc
    what: str


_EMPTY: frozenset = frozenset()


@dataclass(frozen=True)
class Pmap:
    psets: Mapping[str, frozenset] = field(default_factory=dict)
    causes: Mapping[str, frozenset] = field(default_factory=dict)

    # -- queries

    def __contains__(self, v: str) -> bool:
        return v in self.psets

    def get(self, v: str, default: Optional[frozenset] = None) -> Optional[frozenset]:
        return self.psets.get(v, default)

    def __getitem__(self, v: str) -> frozenset:
        return self.psets[v]

    def domain(self) -> frozenset:
        return frozenset(self.psets)

    def causes_of(self, v: str) -> frozenset:
        return self.causes.get(v, _EMPTY)

    # -- updates (all return new maps)

    def set(self, v: str, pset, causes=_EMPTY) -> Pmap:
        ps = dict(self.psets)
        ps[v] = frozenset(pset)
        cs = dict(self.causes)
        if INVALID in ps[v] and causes:
            cs[v] = frozenset(causes)
        else:
            cs.pop(v, None)
        return Pmap(ps, cs)

    def remove(self, v: str) -> Pmap:
        if v not in self.psets:
            return self
        ps = dict(self.psets)
        del ps[v]
        cs = dict(self.causes)
        cs.pop(v, None)
        return Pmap(ps, cs)

    def render(self) -> str:
        return "{" + ", ".join(f"{v}: {format_pset(self.psets[v])}" for v in sorted(self.psets)) + "}"

    @staticmethod
    def of(mapping: Mapping[str, Iterable]) -> Pmap:
        """Build from ``{"p": ["x@0", "invalid"], ...}`` (strings or entries)."""
        ps = {}
        for v, es in mapping.items():
            ps[v] = frozenset(e if isinstance(e, PsetEntry) else parse_entry(e) for e in es)
        return Pmap(ps, {})


BOTTOM = Pmap()


def leq(f: Pmap, g: Pmap) -> bool:
    """dom(f) within dom(g) and f(v) within g(v) everywhere; causes are ignored."""
    for v, ps in f.psets.items():
        other = g.psets.get(v)
        if other is None or not ps <= other:
            return False
    return True


def join(f: Pmap, g: Pmap) -> Pmap:
    if not g.psets and not g.causes:
        return f
    if not f.psets and not f.causes:
        return g
    ps = dict(f.psets)
    for v, s in g.psets.items():
        ps[v] = ps[v] | s if v in ps else s
    cs = dict(f.causes)
    for v, s in g.causes.items():
        cs[v] = cs[v] | s if v in cs else s
    return Pmap(ps, cs)


def join_all(maps: Iterable[Pmap]) -> Pmap:
    out = BOTTOM
    for m in maps:
        out = join(out, m)
    return out


def invalidate(d: Pmap, names: Iterable[str], loc: SourceLoc, what: str = "",
               min_level: int = 0, weak: bool = False, skip: Iterable[str] = ()) -> Pmap:
    """Replace every reference into the families of ``names`` with ``invalid``.

    A variable whose pset meets ``{v@min_level, ..., v@MAX}`` for some v in
    ``names`` loses those entries (kept when ``weak``) and gains ``invalid``,
    with ``loc`` recorded as the cause. Variables in ``skip`` are untouched.
    """
    fam: set[PsetEntry] = set()
    for n in names:
        fam |= family(n, min_level)
    if not fam:
        return d
    skip = set(skip)
    cause = Cause(loc, what)
    ps = dict(d.psets)
    cs = dict(d.causes)
    changed = False
    for x, s in d.psets.items():
        if x in skip or s.isdisjoint(fam):
            continue
        changed = True
        ps[x] = (s if weak else s - fam) | {INVALID}
        cs[x] = cs.get(x, _EMPTY) | {cause}
    return Pmap(ps, cs) if changed else d

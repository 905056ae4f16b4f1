"""Owner / Pointer / Value classification from declarative type facts.

A facts file is a JSON array of objects, one per type::

    [
      {"name": "vector", "satisfies_container_requirements": true,
       "has_user_provided_destructor": true},
      {"name": "Holder", "members_and_bases": ["vector"]},
      {"name": "FILE", "extern": "Owner"}
    ]

Missing flags default to false. Unknown fields are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping, Optional

from .frontend.syntax import BUILTIN_CLASSES, Kind, TypeClass, TypeRef


class FactsError(ValueError):
    pass


@dataclass(frozen=True)
class TypeFacts:
    name: str
    satisfies_container_requirements: bool = False
    satisfies_iterator_requirements: bool = False
    has_user_provided_destructor: bool = False
    has_dereference_operator: bool = False
    trivially_copyable: bool = False
    copy_constructible_and_assignable: bool = False
    members_and_bases: tuple[str, ...] = ()
    is_reference_capture: bool = False
    extern: Optional[Kind] = None


FactsSet = Mapping[str, TypeFacts]

_FLAGS = tuple(
    f.name for f in fields(TypeFacts)
    if f.name not in ("name", "members_and_bases", "extern")
)


def parse_facts(data) -> dict[str, TypeFacts]:
    """Build a facts set from decoded JSON, validating it strictly."""
    if not isinstance(data, list):
        raise FactsError("type facts must be a JSON array of objects")
    known = {f.name for f in fields(TypeFacts)}
    out: dict[str, TypeFacts] = {}
    for i, obj in enumerate(data):
        if not isinstance(obj, dict):
            raise FactsError(f"entry {i}: expected an object")
        unknown = sorted(set(obj) - known)
        if unknown:
            raise FactsError(f"entry {i}: unknown field(s) {', '.join(unknown)}")
        name = obj.get("name")
        if not isinstance(name, str) or not name.isidentifier():
            raise FactsError(f"entry {i}: 'name' must be an identifier")
        if name in out:
            raise FactsError(f"duplicate type {name!r}")
        if name in BUILTIN_CLASSES:
            raise FactsError(f"{name!r} is a builtin class and cannot be redeclared")
        kwargs = {"name": name}
        for flag in _FLAGS:
            if flag in obj:
                if not isinstance(obj[flag], bool):
                    raise FactsError(f"{name}: {flag} must be a boolean")
                kwargs[flag] = obj[flag]
        members = obj.get("members_and_bases", [])
        if not isinstance(members, list) or not all(isinstance(m, str) for m in members):
            raise FactsError(f"{name}: members_and_bases must be a list of type names")
        kwargs["members_and_bases"] = tuple(members)
        if "extern" in obj:
            ext = obj["extern"]
            if ext not in BUILTIN_CLASSES:
                raise FactsError(f"{name}: extern must be one of Owner, Pointer, Value")
            if any(kwargs.get(flag) for flag in _FLAGS) or members:
                raise FactsError(f"{name}: an extern declaration carries no other facts")
            kwargs["extern"] = BUILTIN_CLASSES[ext]
        out[name] = TypeFacts(**kwargs)
    check_facts(out)
    return out


def load_facts(path) -> dict[str, TypeFacts]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FactsError(f"{path}: invalid JSON: {exc}") from None
    return parse_facts(data)


def check_facts(facts: FactsSet) -> None:
    """Reject dangling member names and membership cycles."""
    for f in facts.values():
        for m in f.members_and_bases:
            if m not in facts and m not in BUILTIN_CLASSES:
                raise FactsError(f"type {f.name!r} lists unknown member or base {m!r}")
    state: dict[str, int] = {}  # 1 = on stack, 2 = done
    for root in sorted(facts):
        if state.get(root):
            continue
        stack = [(root, iter(facts[root].members_and_bases))]
        path = [root]
        state[root] = 1
        while stack:
            name, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[name] = 2
                stack.pop()
                path.pop()
                continue
            if nxt not in facts:
                continue
            if state.get(nxt) == 1:
                cycle = path[path.index(nxt):] + [nxt]
                raise FactsError("cyclic membership: " + " -> ".join(cycle))
            if not state.get(nxt):
                state[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(facts[nxt].members_and_bases)))


def _decide(f: TypeFacts, member_kinds: list[Kind]) -> Kind:
    if f.extern is not None:
        return f.extern
    dtor = f.has_user_provided_destructor
    if (f.satisfies_container_requirements and dtor) \
            or (f.has_dereference_operator and dtor) \
            or Kind.OWNER in member_kinds:
        return Kind.OWNER
    if f.satisfies_iterator_requirements \
            or (f.trivially_copyable and f.copy_constructible_and_assignable
                and f.has_dereference_operator) \
            or Kind.POINTER in member_kinds \
            or f.is_reference_capture:
        return Kind.POINTER
    return Kind.VALUE


def _classify_into(name: str, facts: FactsSet, memo: dict[str, Kind]) -> Kind:
    # iterative post-order; check_facts has already ruled out cycles
    todo = [name]
    while todo:
        cur = todo[-1]
        if cur in memo:
            todo.pop()
            continue
        if cur in BUILTIN_CLASSES:
            memo[cur] = BUILTIN_CLASSES[cur]
            todo.pop()
            continue
        pending = [m for m in facts[cur].members_and_bases if m not in memo]
        if pending:
            todo.extend(pending)
            continue
        memo[cur] = _decide(facts[cur], [memo[m] for m in facts[cur].members_and_bases])
        todo.pop()
    return memo[name]


def classify(name: str, facts: FactsSet) -> TypeClass:
    if name in BUILTIN_CLASSES:
        return TypeClass(BUILTIN_CLASSES[name])
    if name not in facts:
        raise FactsError(f"unknown type {name!r}")
    check_facts(facts)
    return TypeClass(_classify_into(name, facts, {}))


def classify_all(facts: FactsSet) -> dict[str, TypeClass]:
    check_facts(facts)
    memo: dict[str, Kind] = {}
    for name in sorted(facts):
        _classify_into(name, facts, memo)
    return {name: TypeClass(memo[name]) for name in sorted(facts)}


class TypeEnv:
    """Resolves written types to classes; builtin class names always resolve."""

    def __init__(self, facts: Optional[FactsSet] = None):
        self.facts = dict(facts or {})
        self._classes = classify_all(self.facts)

    def resolve(self, ref: TypeRef) -> TypeClass:
        if ref.name in BUILTIN_CLASSES:
            return TypeClass(BUILTIN_CLASSES[ref.name], ref.const)
        cls = self._classes.get(ref.name)
        if cls is None:
            raise FactsError(f"unknown type {ref.name!r}")
        return TypeClass(cls.kind, ref.const)

    def knows(self, name: str) -> bool:
        return name in BUILTIN_CLASSES or name in self._classes

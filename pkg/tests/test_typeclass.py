from __future__ import annotations

import itertools
import json
import random

import pytest

from facts_cases import CASES
from lifecheck.frontend.syntax import Kind, TypeRef
from lifecheck.typeclass import (
    FactsError, TypeEnv, check_facts, classify, classify_all, load_facts, parse_facts,
)
from oracles import classify_by_rules

FLAGS = (
    "satisfies_container_requirements", "satisfies_iterator_requirements",
    "has_user_provided_destructor", "has_dereference_operator", "trivially_copyable",
    "copy_constructible_and_assignable", "is_reference_capture",
)


@pytest.mark.parametrize("cid,facts,name,want", CASES, ids=[c[0] for c in CASES])
def test_classification_cases(cid, facts, name, want):
    assert classify(name, parse_facts(facts)).kind is want


def _member_fact(kind):
    if kind is Kind.OWNER:
        return {"name": "M", "satisfies_container_requirements": True,
                "has_user_provided_destructor": True}
    if kind is Kind.POINTER:
        return {"name": "M", "satisfies_iterator_requirements": True}
    return {"name": "M"}


@pytest.mark.parametrize("member", [None, Kind.OWNER, Kind.POINTER, Kind.VALUE])
def test_every_flag_combination_matches_rule_order(member):
    for bits in itertools.product((False, True), repeat=len(FLAGS)):
        flags = dict(zip(FLAGS, bits))
        obj = {"name": "T", **{k: v for k, v in flags.items() if v}}
        facts = []
        member_kinds = ()
        if member is not None:
            facts.append(_member_fact(member))
            obj["members_and_bases"] = ["M"]
            member_kinds = (member,)
        facts.append(obj)
        got = classify("T", parse_facts(facts)).kind
        assert got is classify_by_rules(flags, member_kinds), (flags, member)


def test_classify_all_chain_and_empty():
    facts = parse_facts([
        {"name": "A", "members_and_bases": ["B"]},
        {"name": "B", "members_and_bases": ["C"]},
        {"name": "C", "satisfies_container_requirements": True, "has_user_provided_destructor": True},
    ])
    assert {n: c.kind for n, c in classify_all(facts).items()} == {"A": Kind.OWNER, "B": Kind.OWNER, "C": Kind.OWNER}
    assert classify_all({}) == {}
    facts = parse_facts([{"name": "P", "satisfies_iterator_requirements": True},
                         {"name": "W", "members_and_bases": ["P"]}])
    assert {n: c.kind for n, c in classify_all(facts).items()} == {"P": Kind.POINTER, "W": Kind.POINTER}


def test_classify_all_ignores_declaration_order():
    base = [c for _, facts, _, _ in CASES[:8] for c in facts if c["name"] not in ("T",)]
    rng = random.Random(4)
    names = {}
    for f in base:
        names.setdefault(f["name"], f)
    items = list(names.values())
    want = classify_all(parse_facts(items))
    for _ in range(10):
        rng.shuffle(items)
        assert classify_all(parse_facts(items)) == want


def test_adding_members_flips_value():
    value = [{"name": "T"}]
    assert classify("T", parse_facts(value)).kind is Kind.VALUE
    owner = [_member_fact(Kind.OWNER), {"name": "T", "members_and_bases": ["M"]}]
    pointer = [_member_fact(Kind.POINTER), {"name": "T", "members_and_bases": ["M"]}]
    assert classify("T", parse_facts(owner)).kind is Kind.OWNER
    assert classify("T", parse_facts(pointer)).kind is Kind.POINTER


def test_errors():
    with pytest.raises(FactsError, match="unknown type"):
        classify("Nope", {})
    with pytest.raises(FactsError, match="cyclic membership: A -> B -> A"):
        check_facts(parse_facts([{"name": "A", "members_and_bases": ["B"]},
                                 {"name": "B", "members_and_bases": ["A"]}]))
    with pytest.raises(FactsError):
        check_facts(parse_facts([{"name": "A", "members_and_bases": ["Missing"]}]))
    with pytest.raises(FactsError, match="unknown"):
        parse_facts([{"name": "A", "has_destructor": True}])
    with pytest.raises(FactsError):
        parse_facts([{"name": "A", "trivially_copyable": "yes"}])
    with pytest.raises(FactsError):
        parse_facts([{"name": "A"}, {"name": "A"}])
    with pytest.raises(FactsError):
        parse_facts([{"name": "Owner"}])
    with pytest.raises(FactsError):
        parse_facts([{"name": "F", "extern": "Owner", "trivially_copyable": True}])
    with pytest.raises(FactsError):
        parse_facts({"name": "A"})


def test_load_facts_and_env(tmp_path):
    path = tmp_path / "facts.json"
    path.write_text(json.dumps([{"name": "vec", "satisfies_container_requirements": True,
                                 "has_user_provided_destructor": True}]))
    env = TypeEnv(load_facts(path))
    cls = env.resolve(TypeRef("vec", const=True))
    assert cls.kind is Kind.OWNER and cls.const
    assert env.resolve(TypeRef("Pointer")).kind is Kind.POINTER
    assert env.knows("vec") and env.knows("Value") and not env.knows("other")
    with pytest.raises(FactsError):
        env.resolve(TypeRef("other"))

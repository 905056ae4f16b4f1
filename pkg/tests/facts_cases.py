"""Thirty classification cases: every Owner and Pointer clause, the Value
fallthrough, rule priority and membership closure."""

from __future__ import annotations

from lifecheck.frontend.syntax import Kind

O, P, V = Kind.OWNER, Kind.POINTER, Kind.VALUE

# (case id, facts list, type to classify, expected kind)
CASES = [
    # Owner clause 1: container requirements with a user destructor
    ("vector-like", [{"name": "T", "satisfies_container_requirements": True,
                      "has_user_provided_destructor": True}], "T", O),
    ("container-without-dtor", [{"name": "T", "satisfies_container_requirements": True}], "T", V),
    ("dtor-alone", [{"name": "T", "has_user_provided_destructor": True}], "T", V),
    # Owner clause 2: dereference operator with a user destructor
    ("unique-ptr-like", [{"name": "T", "has_dereference_operator": True,
                          "has_user_provided_destructor": True}], "T", O),
    ("deref-alone", [{"name": "T", "has_dereference_operator": True}], "T", V),
    # Owner clause 3: an Owner member or base
    ("owner-member", [{"name": "V", "satisfies_container_requirements": True,
                       "has_user_provided_destructor": True},
                      {"name": "S", "members_and_bases": ["V"]}], "S", O),
    ("owner-base-among-values", [{"name": "I"},
                                 {"name": "U", "has_dereference_operator": True,
                                  "has_user_provided_destructor": True},
                                 {"name": "S", "members_and_bases": ["I", "U"]}], "S", O),
    ("builtin-owner-member", [{"name": "S", "members_and_bases": ["Owner"]}], "S", O),
    # Pointer clause 1: iterator requirements
    ("iterator-like", [{"name": "T", "satisfies_iterator_requirements": True}], "T", P),
    # Pointer clause 2: trivially copyable, copyable and dereferenceable
    ("raw-pointer-like", [{"name": "T", "trivially_copyable": True,
                           "copy_constructible_and_assignable": True,
                           "has_dereference_operator": True}], "T", P),
    ("copyable-no-deref", [{"name": "T", "trivially_copyable": True,
                            "copy_constructible_and_assignable": True}], "T", V),
    ("trivial-deref-not-assignable", [{"name": "T", "trivially_copyable": True,
                                       "has_dereference_operator": True}], "T", V),
    ("assignable-deref-not-trivial", [{"name": "T", "copy_constructible_and_assignable": True,
                                       "has_dereference_operator": True}], "T", V),
    # Pointer clause 3: a Pointer member or base
    ("pointer-member", [{"name": "P", "satisfies_iterator_requirements": True},
                        {"name": "W", "members_and_bases": ["P"]}], "W", P),
    ("builtin-pointer-member", [{"name": "W", "members_and_bases": ["Pointer"]}], "W", P),
    # Pointer clause 4: lambda capturing by reference
    ("reference-capture", [{"name": "L", "is_reference_capture": True}], "L", P),
    # Value fallthrough
    ("plain-int", [{"name": "int"}], "int", V),
    ("value-members", [{"name": "A"}, {"name": "B", "members_and_bases": ["A", "Value"]}], "B", V),
    ("trivially-copyable-only", [{"name": "T", "trivially_copyable": True}], "T", V),
    # priority: any Owner clause beats every Pointer clause
    ("owner-beats-iterator", [{"name": "T", "has_dereference_operator": True,
                               "has_user_provided_destructor": True,
                               "satisfies_iterator_requirements": True}], "T", O),
    ("owner-beats-capture", [{"name": "T", "satisfies_container_requirements": True,
                              "has_user_provided_destructor": True,
                              "is_reference_capture": True}], "T", O),
    ("owner-member-beats-pointer-member", [{"name": "V", "satisfies_container_requirements": True,
                                            "has_user_provided_destructor": True},
                                           {"name": "P", "satisfies_iterator_requirements": True},
                                           {"name": "S", "members_and_bases": ["P", "V"]}], "S", O),
    ("owner-member-beats-own-iterator", [{"name": "V", "satisfies_container_requirements": True,
                                          "has_user_provided_destructor": True},
                                         {"name": "S", "satisfies_iterator_requirements": True,
                                          "members_and_bases": ["V"]}], "S", O),
    ("all-flags", [{"name": "T", "satisfies_container_requirements": True,
                    "satisfies_iterator_requirements": True,
                    "has_user_provided_destructor": True, "has_dereference_operator": True,
                    "trivially_copyable": True, "copy_constructible_and_assignable": True,
                    "is_reference_capture": True}], "T", O),
    ("pointer-flags-without-dtor", [{"name": "T", "satisfies_container_requirements": True,
                                     "satisfies_iterator_requirements": True}], "T", P),
    # closure over membership chains
    ("owner-chain-3", [{"name": "C", "satisfies_container_requirements": True,
                        "has_user_provided_destructor": True},
                       {"name": "B", "members_and_bases": ["C"]},
                       {"name": "A", "members_and_bases": ["B"]}], "A", O),
    ("pointer-chain-3", [{"name": "C", "satisfies_iterator_requirements": True},
                         {"name": "B", "members_and_bases": ["C"]},
                         {"name": "A", "members_and_bases": ["B"]}], "A", P),
    ("member-of-pointer-does-not-leak-up", [{"name": "V", "satisfies_container_requirements": True,
                                             "has_user_provided_destructor": True},
                                            {"name": "P", "satisfies_iterator_requirements": True,
                                             "members_and_bases": []},
                                            {"name": "A", "members_and_bases": ["V"]}], "P", P),
    # opaque library types
    ("extern-owner", [{"name": "FILE", "extern": "Owner"}], "FILE", O),
    ("extern-pointer", [{"name": "HANDLE", "extern": "Pointer"}], "HANDLE", P),
]

assert len(CASES) == 30

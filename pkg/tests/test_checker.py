from __future__ import annotations

from conftest import CORPUS, BRANCH_LOWERED, analyze, codes
from lifecheck.analysis.pset import INVALID, NULL
from lifecheck.corpus import _facts_for
from lifecheck.diagnostics import render_text
from lifecheck.normalize import instr as I
from lifecheck.pipeline import Options, analyze_source

ALIAS = """\
extern fn g(p: Pointer, q: Pointer);
fn main(o: {const}Owner) {{
    let p: Pointer = *&o;
    let q: Pointer = p;
    g(p, q);
}}
"""


def test_dangling_branch_e001_with_destroy_note():
    (d,) = analyze(BRANCH_LOWERED).diagnostics
    assert (d.code, d.loc.line) == ("E001", 11)
    assert [(n.loc.line, n.message) for n in d.notes] == [(9, "'p' invalidated here: destroy(y)")]
    assert render_text(d).splitlines() == [
        "t.lt:11:5: error[E001]: dereference of possibly invalid Pointer 'p'",
        "t.lt:9:9: note: 'p' invalidated here: destroy(y)",
    ]


def test_moved_from_owner():
    (d,) = analyze("fn main() { let o: Owner; let v: Owner; v = move o; *o = 1; }").diagnostics
    assert d.code == "E002" and "moved-from" in d.message
    assert "move o" in d.notes[0].message


def test_no_derefs_no_diagnostics():
    assert analyze("fn main() { let a: Value = 1; let b: Value = a + 2; }").diagnostics == []


def test_invalid_argument():
    a = analyze("extern fn f(p: Pointer);\nfn main() { let p: Pointer; f(p); }")
    (d,) = a.diagnostics
    assert d.code == "E004" and "never assigned" in d.notes[0].message


def test_two_arguments_into_same_owner():
    assert codes(analyze(ALIAS.format(const=""))) == [(5, "E004")]
    assert codes(analyze(ALIAS.format(const="const "))) == []


def test_precondition_violation_and_satisfaction():
    src = """\
pre(p,{global}) extern fn keep(p: Pointer);
global gv: Value;
fn main() {
    let x: Value;
    let p: Pointer = &gv;
    keep(p);
    p = &x;
    keep(p);
}
"""
    assert codes(analyze(src)) == [(8, "E004")]


def test_return_of_destroyed_local():
    src = "fn f() -> Pointer {\n    let x: Value;\n    let p: Pointer = &x;\n    return p;\n}\n"
    (d,) = analyze(src).diagnostics
    assert (d.code, d.loc.line) == ("E005", 4)
    assert "destroy(x)" in d.notes[0].message


def test_postcondition_null_and_global_returns():
    src = "post(g,{x,null}) fn g(x: Pointer) -> Pointer {\n    let r: Pointer = null;\n    return r;\n}\n"
    assert analyze(src).diagnostics == []
    src = "global gv: Value;\nfn f() -> Pointer {\n    let p: Pointer = &gv;\n    return p;\n}\n"
    assert analyze(src).diagnostics == []


def test_postcondition_violation():
    src = "post(g,{x}) fn g(x: Pointer, y: Pointer) -> Pointer {\n    return y;\n}\n"
    assert codes(analyze(src)) == [(2, "E005")]


def test_default_postcondition_rejects_foreign_pointer():
    src = "fn f(o: Owner) -> Pointer {\n    let x: Value;\n    let p: Pointer = &x;\n    return p;\n}\n"
    assert codes(analyze(src)) == [(4, "E005")]


def test_null_warning_only_with_flag():
    src = "fn main() { let p: Pointer = null; *p = 1; }"
    assert analyze(src).diagnostics == []
    (d,) = analyze(src, warnings=True).diagnostics
    assert d.code == "W101" and d.severity == "warning" and not d.is_error


def test_unknown_callee():
    src = "fn main() { let x: Value; let p: Pointer = &x; h(p); }"
    assert analyze(src).diagnostics == []
    assert codes(analyze(src, warnings=True)) == [(1, "W102")]
    assert codes(analyze(src, strict_calls=True)) == [(1, "E004")]


def test_certain_only():
    assert analyze(BRANCH_LOWERED, certain_only=True).diagnostics == []
    src = "extern fn f(p: Pointer);\nfn main() { let p: Pointer; f(p); *p = 1; }"
    assert codes(analyze(src, certain_only=True)) == [(2, "E004"), (2, "E001")]


def test_diagnostics_sorted_and_order_independent():
    for path in sorted(CORPUS.rglob("*.lt")):
        facts = _facts_for(path, CORPUS, {})
        text = path.read_text()
        ref = analyze_source(text, "f.lt", facts, Options(warnings=True)).diagnostics
        assert ref == sorted(ref, key=lambda d: d.sort_key())
        for order, seed in (("lifo", 0), ("random", 1), ("random", 2)):
            got = analyze_source(text, "f.lt", facts, Options(warnings=True, order=order, rng_seed=seed))
            assert got.diagnostics == ref, path.name


def test_witness_and_provenance_invariants():
    """Each E001/E002 sits at a node whose input pset holds invalid, with a note explaining it."""
    for path in sorted(CORPUS.rglob("*.lt")):
        facts = _facts_for(path, CORPUS, {})
        a = analyze_source(path.read_text(), "f.lt", facts)
        for d in a.diagnostics:
            if d.code not in ("E001", "E002"):
                continue
            assert d.notes, (path.name, d)
            hits = []
            for fa in a.functions:
                for n, ins in enumerate(fa.cfg.nodes):
                    if ins.loc == d.loc and isinstance(ins, (I.DerefRead, I.DerefWrite, I.Dealloc)):
                        v = ins.src if isinstance(ins, I.DerefRead) else (ins.dst if isinstance(ins, I.DerefWrite) else ins.var)
                        hits.append(INVALID in fa.result.inputs[n].get(v, frozenset({INVALID})))
            assert any(hits), (path.name, d)


def test_no_error_where_no_pset_has_invalid():
    src = "fn main() {\n    let x: Value;\n    let p: Pointer = &x;\n    *p = 1;\n    let v: Value = *p;\n}\n"
    a = analyze(src)
    assert a.diagnostics == []
    fa = a.function("main")
    for n, ins in enumerate(fa.cfg.nodes):
        for ps in fa.result.inputs[n].psets.values():
            if isinstance(ins, (I.DerefRead, I.DerefWrite)):
                assert NULL not in ps

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import BRANCH_SCOPED, BRANCH_LOWERED
from lifecheck.frontend import syntax as S
from lifecheck.frontend.lexer import ParseError
from lifecheck.frontend.parser import parse_program
from lifecheck.frontend.printer import pretty_print
from lifecheck.frontend.validate import validate_annotations, validate_program
from lifecheck.typeclass import TypeEnv

NAMES = ("a", "b", "p", "q", "o", "x", "y")


def test_precondition_annotation():
    prog = parse_program("pre(z,{x,y}) fn f(x: Pointer, y: Pointer, z: Pointer) -> Pointer { return z; }")
    (fn,) = prog.functions
    assert fn.annotations == (S.Annotation("pre", "z", ("x", "y")),)
    assert fn.pre() == {"z": ("x", "y")}
    assert fn.ret == S.TypeRef("Pointer")


def test_empty_source():
    prog = parse_program("")
    assert prog.functions == () and prog.globals == ()


def test_duplicate_parameter():
    with pytest.raises(ParseError, match="duplicate parameter"):
        parse_program("fn f(x: Pointer, x: Value) {}")


def test_multiple_pairs_in_one_annotation():
    prog = parse_program("pre(a,{b}, c,{null}) fn f(a: Pointer, b: Pointer, c: Pointer) {}")
    assert prog.functions[0].pre() == {"a": ("b",), "c": ("null",)}


def test_branch_programs_parse():
    for src in (BRANCH_SCOPED, BRANCH_LOWERED):
        prog = parse_program(src)
        assert [f.name for f in prog.functions] == ["main"]


def test_annotation_validation():
    ok = parse_program("post(g,{x,null}) fn g(x: Pointer) -> Pointer { return x; }")
    assert validate_annotations(ok) == []
    bad = parse_program("post(h,{q}) fn g(q: Pointer) -> Pointer { return q; }")
    diags = validate_annotations(bad)
    assert len(diags) == 1 and "post target must be function name" in diags[0].message
    assert diags[0].code == "E100"
    unknown = parse_program("pre(z,{w}) fn f(z: Pointer) {}")
    diags = validate_annotations(unknown)
    assert len(diags) == 1 and "'w'" in diags[0].message
    with pytest.raises(ParseError, match="unknown parameter"):
        parse_program("pre(w,{z}) fn f(z: Pointer) {}")


@pytest.mark.parametrize("src,code", [
    ("fn main() { x = 1; }", "E101"),
    ("fn main() { let x: Value; let x: Value; }", "E101"),
    ("fn main() { let x: Widget; }", "E102"),
    ("fn f(a: Value) {} fn main() { f(); }", "E103"),
    ("fn main() { { let y: Value; } y = 2; }", "E101"),
])
def test_frontend_codes(src, code):
    diags = validate_program(parse_program(src), TypeEnv())
    assert code in {d.code for d in diags}


@pytest.mark.parametrize("src", [
    "fn main() { let x: Value = ; }",
    "fn main() { 1 + 2; }",
    "fn main() { p = [q] = 3; }",
    "fn main( {",
    "global g Value;",
    "pre(p,{}) fn f(p: Pointer) {}",
    "fn main() { *p = new(1); }",
    "fn main() { x = 1 + allocate(2); }",
])
def test_parse_errors(src):
    with pytest.raises(ParseError):
        parse_program(src)


def test_trivia():
    src = "fn main() {\n    // expect-error@+1: E001\n    x = 1;\n    x = 2; // known-fp: E004 caller owns it\n    // expect-error: oops\n}\n"
    prog = parse_program(src)
    assert [(e.kind, e.line, e.code) for e in prog.expectations] == [
        ("expect-error", 3, "E001"), ("known-fp", 4, "E004")]
    assert prog.expectations[1].note == "caller owns it"
    assert len(prog.bad_trivia) == 1 and prog.bad_trivia[0][0].line == 5


def test_deep_nesting_is_a_parse_error():
    with pytest.raises(ParseError):
        parse_program("fn main() { x = " + "(" * 500 + "1" + ")" * 500 + "; }")


# -- generated ASTs

names = st.sampled_from(NAMES)
ints = st.integers(min_value=0, max_value=1000)


def _exprs():
    leaf = st.one_of(
        names.map(S.Name), ints.map(S.IntLit), st.just(S.NullLit()),
        names.map(S.AddressOf), names.map(S.MoveOf),
    )

    def extend(sub):
        return st.one_of(
            st.builds(S.BinOp, st.sampled_from(sorted(("||", "&&", "==", "!=", "<", ">", "<=", ">=", "+", "-", "*", "/", "%"))), sub, sub),
            st.builds(S.UnaryOp, st.sampled_from(("-", "!")), sub),
            st.builds(S.Deref, sub, st.booleans()),
            st.builds(S.IncDec, st.sampled_from(("++", "--")), st.booleans(), names.map(S.Name)),
            st.builds(S.Index, names.map(S.Name), sub),
            st.builds(S.Call, st.sampled_from(("f", "g")), st.lists(sub, max_size=3).map(tuple)),
        )

    return st.recursive(leaf, extend, max_leaves=8)


exprs = _exprs()
types = st.builds(S.TypeRef, st.sampled_from(("Owner", "Pointer", "Value")), st.booleans())
lvalues = st.one_of(names.map(S.Name), st.builds(S.Deref, exprs, st.booleans()))


def _stmts():
    simple = st.one_of(
        st.builds(S.Let, names, types, st.none() | exprs),
        st.builds(S.Let, names, types, st.builds(S.New, exprs)),
        st.builds(S.Create, names, types),
        st.builds(S.Destroy, names),
        st.builds(S.Deallocate, exprs),
        st.builds(S.Delete, exprs),
        st.builds(S.Assign, lvalues, exprs, st.sampled_from(("=", "+=", "-="))),
        st.builds(S.Assign, names.map(S.Name), st.builds(S.Allocate, exprs)),
        st.builds(S.ExprStmt, st.builds(S.Call, st.just("f"), st.lists(exprs, max_size=2).map(tuple))),
        st.builds(S.Return, st.none() | exprs),
    )

    def extend(sub):
        block = st.lists(sub, max_size=3).map(lambda ss: S.Block(tuple(ss)))
        return st.one_of(
            block,
            st.builds(S.If, exprs, block, st.none() | block),
            st.builds(S.While, exprs, block),
        )

    return st.recursive(simple, extend, max_leaves=10)


stmts = _stmts()
params = st.lists(st.builds(S.Param, st.sampled_from(("x", "y", "z")), types, st.booleans()),
                  max_size=3, unique_by=lambda p: p.name).map(tuple)


@st.composite
def programs(draw):
    globals_ = tuple(S.Global(n, draw(types)) for n in draw(st.lists(st.sampled_from(("g1", "g2")), unique=True)))
    fns = []
    for name in draw(st.lists(st.sampled_from(("main", "f", "g")), min_size=1, unique=True)):
        ps = draw(params)
        anns = ()
        if ps and draw(st.booleans()):
            anns = (S.Annotation("pre", ps[0].name, (draw(st.sampled_from(("null", "global", ps[-1].name))),)),)
        body = None if draw(st.integers(0, 4)) == 0 else S.Block(tuple(draw(st.lists(stmts, max_size=4))))
        fns.append(S.Function(name, ps, draw(st.none() | types), anns, body))
    return S.Program(globals_, tuple(fns))


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(programs())
def test_print_parse_round_trip(prog):
    text = pretty_print(prog)
    assert parse_program(text) == prog
    assert pretty_print(parse_program(text)) == text


def _all_locs(node):
    if isinstance(node, S.Node):
        yield node.loc
        for f in node.__dataclass_fields__:
            if f != "loc":
                yield from _all_locs(getattr(node, f))
    elif isinstance(node, tuple):
        for x in node:
            yield from _all_locs(x)


@settings(max_examples=200, deadline=None)
@given(programs())
def test_locations_within_bounds(prog):
    text = pretty_print(prog)
    lines = text.split("\n")
    for loc in _all_locs(parse_program(text, "f.lt")):
        if loc is S.NOWHERE:
            continue
        assert 1 <= loc.line <= len(lines)
        assert 1 <= loc.column <= len(lines[loc.line - 1]) + 1


@settings(max_examples=500, deadline=None)
@given(st.binary(max_size=200))
def test_parsing_is_total_on_bytes(data):
    text = data.decode("utf-8", errors="replace")
    try:
        parse_program(text)
    except ParseError:
        pass


TOKENS = ["fn", "main", "(", ")", "{", "}", "let", "x", ":", "Pointer", ";", "=", "&", "*", "[", "]",
          "move", "if", "while", "return", "1", "null", "+", "++", "new", "delete", ",", "pre", "post",
          "//", "expect-error@+1: E001", "\n"]


@settings(max_examples=500, deadline=None)
@given(st.lists(st.sampled_from(TOKENS), max_size=40))
def test_parsing_is_total_on_token_soup(toks):
    try:
        parse_program(" ".join(toks))
    except ParseError:
        pass

from __future__ import annotations

from collections import Counter

from conftest import CORPUS, BRANCH_SCOPED, BRANCH_LOWERED
from lifecheck.frontend import syntax as S
from lifecheck.frontend.parser import parse_program
from lifecheck.frontend.printer import pretty_print
from lifecheck.gen import GenConfig, generate
from lifecheck.interp import Terminal, run
from lifecheck.normalize import instr as I
from lifecheck.normalize.cfg import build_cfg, to_dot
from lifecheck.normalize.instr import format_instr
from lifecheck.normalize.lower import desugar_heap, lower_scopes, reject_pointer_arith
from lifecheck.typeclass import TypeEnv


def lowered(src: str):
    return desugar_heap(lower_scopes(parse_program(src)))


def cfg_of(src: str, name: str = "main"):
    prog = lowered(src)
    return build_cfg(prog.function(name), prog, TypeEnv())


# -- lower_scopes

def test_scoped_branch_lowers_to_explicit_lifetimes():
    got = lower_scopes(parse_program(BRANCH_SCOPED)).function("main").body
    want = parse_program(BRANCH_LOWERED).function("main").body
    # the lowered body also releases the outer locals at function end
    assert got.stmts[:-2] == want.stmts
    assert got.stmts[-2:] == (S.Destroy("p"), S.Destroy("x"))


def test_empty_block():
    prog = lower_scopes(parse_program("fn main() { {} }"))
    assert prog.function("main").body.stmts == (S.Block(()),)


def test_destroys_in_reverse_declaration_order():
    prog = lower_scopes(parse_program("fn main() { let a: Value; let b: Pointer = &a; }"))
    stmts = prog.function("main").body.stmts
    assert [type(s).__name__ for s in stmts] == ["Create", "Create", "Assign", "Destroy", "Destroy"]
    assert [s.name for s in stmts if isinstance(s, S.Destroy)] == ["b", "a"]
    # executing the lowered program never touches a after its destroy
    assert isinstance(run(prog, lowered=True), Terminal)


def test_owner_released_before_destroy():
    prog = lower_scopes(parse_program("fn main() { let o: Owner; }"))
    stmts = prog.function("main").body.stmts
    assert isinstance(stmts[1], S.Deallocate) and stmts[1].implicit
    assert stmts[2] == S.Destroy("o")


def test_explicit_create_destroy_pass_through():
    prog = parse_program(BRANCH_LOWERED)
    assert lower_scopes(prog).function("main").body == prog.function("main").body


def test_return_runs_cleanup():
    prog = lower_scopes(parse_program("fn f() -> Value { let a: Value = 1; return a; }"))
    ret = prog.function("f").body.stmts[-1]
    assert isinstance(ret, S.Return) and ret.cleanup == (S.Destroy("a"),)


# -- desugar_heap

def test_new_desugars_to_synthetic_owner():
    prog = lowered("fn main() { let p: Pointer; p = new(4); }")
    text = pretty_print(prog)
    assert "create(g_1, Owner);\n    g_1 = allocate(4);\n    p = g_1;" in text


def test_program_without_heap_is_unchanged():
    prog = lower_scopes(parse_program(BRANCH_SCOPED))
    assert desugar_heap(prog) == prog


def test_two_news_on_one_line_are_distinct():
    text = pretty_print(lowered("fn main() { let p: Pointer; let q: Pointer; p = new(1); q = new(1); }"))
    assert "g_1 = allocate(1)" in text and "g_2 = allocate(1)" in text


def test_synthetic_names_avoid_user_names():
    text = pretty_print(lowered("fn main() { let g_1: Value; let p: Pointer; p = new(2); }"))
    assert "create(g_1, Owner)" not in text


def test_delete_becomes_deallocate():
    text = pretty_print(lowered("fn main() { let p: Pointer; p = new(1); delete p; }"))
    assert "deallocate(p);" in text and "delete" not in text


# -- reject_pointer_arith

def test_twelve_forms():
    src = (CORPUS / "regular" / "pointer_arithmetic.lt").read_text()
    diags = reject_pointer_arith(parse_program(src))
    assert [d.code for d in diags] == ["E003"] * 12
    assert [d.loc.line for d in diags] == list(range(8, 20))


def test_value_arithmetic_is_fine():
    src = (CORPUS / "regular" / "value_arithmetic.lt").read_text()
    assert reject_pointer_arith(parse_program(src)) == []
    assert reject_pointer_arith(parse_program("fn main() { let a: Value; let b: Value; let n: Value = a + b; }")) == []


def test_single_form_and_both_index_forms():
    (d,) = reject_pointer_arith(parse_program("fn main(p: Pointer) { let q: Pointer; q = p + 1; }"))
    assert d.code == "E003" and d.loc.line == 1
    diags = reject_pointer_arith(parse_program("fn f(p: Pointer, i: Value) -> Value { i = p[i]; return i[p]; }"))
    assert len(diags) == 2


# -- build_cfg

def _kinds(cfg):
    return [type(n).__name__ for n in cfg.nodes]


def test_branch_diamond():
    cfg = cfg_of(BRANCH_LOWERED)
    text = [format_instr(n) for n in cfg.nodes]
    branch = text.index("nop if")
    assert len(cfg.succs[branch]) == 2
    then_first, else_first = cfg.succs[branch]
    assert text[then_first] == "p = &x"
    assert text[else_first:else_first + 3] == ["create(y, Value)", "p = &y", "destroy(y)"]
    join = text.index("nop endif")
    assert sorted(cfg.preds()[join]) == [then_first, else_first + 2]
    assert text[join + 2] == "[p] = %t3"
    assert text[:3] == ["nop entry", "create(x, Value)", "create(p, Pointer)"]
    assert cfg.is_acyclic()


def test_straight_line_chain():
    cfg = cfg_of("fn main() { create(x, Value); create(p, Pointer); p = &x; }")
    assert all(len(s) == 1 for s in cfg.succs[:-1]) and cfg.succs[-1] == []
    assert [format_instr(n) for n in cfg.nodes if not isinstance(n, (I.Nop, I.ReturnInstr))] == [
        "create(x, Value)", "create(p, Pointer)", "p = &x"]


def test_loop_back_edge():
    cfg = cfg_of("fn main(c: Value) { let x: Value; let p: Pointer; while (c) { p = &x; } }")
    text = [format_instr(n) for n in cfg.nodes]
    head = text.index("nop while")
    assert any(a > head and b <= head for a, b in cfg.edges)
    assert not cfg.is_acyclic()
    assert len(cfg.succs[head]) == 2


def test_temporaries_numbered_in_visit_order():
    cfg = cfg_of("fn main(p: Pointer) { let v: Value; v = **p + 1; }")
    temps = [n.dst for n in cfg.nodes if getattr(n, "dst", "").startswith("%t")]
    # numbered in AST pre-order: the outer deref is %t1 though emitted after %t2
    assert temps == ["%t2", "%t1", "%t3"]
    again = cfg_of("fn main(p: Pointer) { let v: Value; v = **p + 1; }")
    assert [format_instr(n) for n in again.nodes] == [format_instr(n) for n in cfg.nodes]


def test_address_and_deref_emit_temporaries():
    cfg = cfg_of("fn main() { let x: Value; let p: Pointer; p = &x; *p = **(&p); }")
    kinds = Counter(_kinds(cfg))
    assert kinds["TakeAddress"] >= 2 and kinds["DerefRead"] >= 2 and kinds["DerefWrite"] == 1


def _check_structure(cfg):
    preds = cfg.preds()
    assert preds[cfg.entry] == []
    seen, stack = {cfg.entry}, [cfg.entry]
    while stack:
        for m in cfg.succs[stack.pop()]:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    assert seen == set(range(len(cfg.nodes)))
    for n, ins in enumerate(cfg.nodes):
        assert ins.loc is not S.NOWHERE or isinstance(ins, I.Nop), (n, ins)
        if cfg.succs[n] == []:
            assert isinstance(ins, I.ReturnInstr)


def _corpus_cfgs():
    from lifecheck.corpus import _facts_for
    cache = {}
    for path in sorted(CORPUS.rglob("*.lt")):
        facts = _facts_for(path, CORPUS, cache)
        env = TypeEnv(facts)
        prog = desugar_heap(lower_scopes(parse_program(path.read_text()), env))
        for fn in prog.functions:
            if fn.body is not None:
                yield path.name, build_cfg(fn, prog, env)


def test_structural_invariants_on_corpus_and_generated():
    count = 0
    for _, cfg in _corpus_cfgs():
        _check_structure(cfg)
        count += 1
    for seed in range(100):
        prog = desugar_heap(lower_scopes(generate(GenConfig(seed=seed))))
        for fn in prog.functions:
            _check_structure(build_cfg(fn, prog, TypeEnv()))
            count += 1
    assert count > 150


def _paths(cfg, limit=2000):
    out, stack = [], [(cfg.entry,)]
    while stack and len(out) < limit:
        path = stack.pop()
        succ = cfg.succs[path[-1]]
        if not succ:
            out.append(path)
        for m in succ:
            stack.append(path + (m,))
    return out


def _balanced(cfg, path, tracked):
    live = Counter()
    for n in path:
        ins = cfg.nodes[n]
        if isinstance(ins, I.Create) and ins.var in tracked:
            assert live[ins.var] == 0, f"{ins.var} created twice"
            live[ins.var] += 1
        elif isinstance(ins, I.Destroy) and ins.var in tracked:
            assert live[ins.var] == 1, f"{ins.var} destroyed without create"
            live[ins.var] -= 1
    assert not +live, f"not destroyed: {sorted(+live)}"


def test_balanced_lifetimes_on_every_path():
    checked = 0
    for seed in range(300):
        prog = generate(GenConfig(seed=seed, features=frozenset({"moves", "calls", "heap"})))
        low = desugar_heap(lower_scopes(prog))
        for fn in low.functions:
            cfg = build_cfg(fn, low, TypeEnv())
            if not cfg.is_acyclic():
                continue
            # heap owners model allocations that outlive the function
            tracked = {i.var for i in cfg.nodes if isinstance(i, I.Create) and not i.var.startswith("g_")}
            for path in _paths(cfg):
                _balanced(cfg, path, tracked)
                checked += 1
    assert checked > 300


def test_balanced_lifetimes_with_loops_by_scope_stack():
    for seed in range(300):
        prog = lower_scopes(generate(GenConfig(seed=seed)))
        for fn in prog.functions:
            _scope_stack(fn.body, [], [p.name for p in fn.params if not p.by_ref])


def _scope_stack(block, outer, params=()):
    created = list(params)
    for s in block.stmts:
        if isinstance(s, S.Create) and not s.name.startswith("g_"):
            created.append(s.name)
        elif isinstance(s, S.Destroy) and not s.name.startswith("g_"):
            assert created and created[-1] == s.name or s.name in created
            created.remove(s.name)
        elif isinstance(s, S.Block):
            _scope_stack(s, outer + created)
        elif isinstance(s, S.If):
            _scope_stack(s.then, outer + created)
            if s.orelse:
                _scope_stack(s.orelse, outer + created)
        elif isinstance(s, S.While):
            _scope_stack(s.body, outer + created)
        elif isinstance(s, S.Return):
            names = [c.name for c in s.cleanup if isinstance(c, S.Destroy)]
            assert names == list(reversed(outer + created))
            return
    assert created == [], f"leaked {created}"


def test_dot_output():
    cfg = cfg_of(BRANCH_LOWERED)
    dot = to_dot(cfg)
    assert dot.startswith("digraph")
    assert dot.count("->") == len(cfg.edges)
    assert "destroy(y)" in dot and ":9:" in dot or "9:" in dot

"""Render syntax trees back to `.lt` source, one statement per line."""

from __future__ import annotations

from .parser import BINARY_PREC
from .syntax import (
    Allocate, AddressOf, Annotation, Assign, BinOp, Block, Call, Create,
    Deallocate, Delete, Deref, Destroy, Expr, ExprStmt, Function, If, IncDec,
    Index, IntLit, Let, MoveOf, Name, New, NullLit, Program, Return, Stmt,
    TypeRef, UnaryOp, While,
)

_UNARY = 7
_POSTFIX = 8
_ATOM = 9


def format_expr(e: Expr) -> str:
    return _expr(e, 0)


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return BINARY_PREC[e.op]
    if isinstance(e, (UnaryOp, AddressOf, MoveOf)) or (isinstance(e, Deref) and not e.bracket):
        return _UNARY
    if isinstance(e, IncDec):
        return _UNARY if e.prefix else _POSTFIX
    if isinstance(e, Index):
        return _POSTFIX
    return _ATOM


def _expr(e: Expr, ctx: int) -> str:
    if isinstance(e, Name):
        s = e.id
    elif isinstance(e, IntLit):
        s = str(e.value)
    elif isinstance(e, NullLit):
        s = "null"
    elif isinstance(e, AddressOf):
        s = f"&{e.name}"
    elif isinstance(e, MoveOf):
        s = f"move {e.name}"
    elif isinstance(e, Deref):
        s = f"[{_expr(e.operand, 0)}]" if e.bracket else f"*{_expr(e.operand, _UNARY)}"
    elif isinstance(e, UnaryOp):
        inner = _expr(e.operand, _UNARY)
        # keep `- -x` from lexing as `--x`
        sep = " " if inner[:1] in ("-", "!") else ""
        s = f"{e.op}{sep}{inner}"
    elif isinstance(e, IncDec):
        if e.prefix:
            s = f"{e.op}{_expr(e.operand, _UNARY)}"
        else:
            s = f"{_expr(e.operand, _POSTFIX)}{e.op}"
    elif isinstance(e, BinOp):
        p = BINARY_PREC[e.op]
        s = f"{_expr(e.lhs, p)} {e.op} {_expr(e.rhs, p + 1)}"
    elif isinstance(e, Index):
        s = f"{_expr(e.base, _POSTFIX)}[{_expr(e.index, 0)}]"
    elif isinstance(e, Call):
        s = f"{e.callee}({', '.join(_expr(a, 0) for a in e.args)})"
    elif isinstance(e, Allocate):
        s = f"allocate({_expr(e.size, 0)})"
    elif isinstance(e, New):
        s = f"new({_expr(e.size, 0)})"
    else:
        raise TypeError(f"not an expression: {e!r}")
    return f"({s})" if _prec(e) < ctx else s


def format_type(t: TypeRef) -> str:
    return ("const " if t.const else "") + t.name


def _annotation(a: Annotation) -> str:
    return f"{a.kind}({a.target},{{{','.join(a.lifetimes)}}})"


def format_stmt(s: Stmt, indent: int = 0) -> list[str]:
    pad = "    " * indent
    if isinstance(s, Let):
        init = f" = {format_expr(s.init)}" if s.init is not None else ""
        return [f"{pad}let {s.name}: {format_type(s.type)}{init};"]
    if isinstance(s, Create):
        return [f"{pad}create({s.name}, {format_type(s.type)});"]
    if isinstance(s, Destroy):
        return [f"{pad}destroy({s.name});"]
    if isinstance(s, Deallocate):
        tail = "  // scope exit" if s.implicit else ""
        return [f"{pad}deallocate({format_expr(s.operand)});{tail}"]
    if isinstance(s, Delete):
        return [f"{pad}delete {format_expr(s.operand)};"]
    if isinstance(s, Assign):
        return [f"{pad}{format_expr(s.target)} {s.op} {format_expr(s.value)};"]
    if isinstance(s, ExprStmt):
        return [f"{pad}{format_expr(s.expr)};"]
    if isinstance(s, Block):
        return [f"{pad}{{", *_body(s, indent + 1), f"{pad}}}"]
    if isinstance(s, If):
        lines = [f"{pad}if ({format_expr(s.cond)}) {{", *_body(s.then, indent + 1)]
        if s.orelse is not None:
            lines += [f"{pad}}} else {{", *_body(s.orelse, indent + 1)]
        return lines + [f"{pad}}}"]
    if isinstance(s, While):
        return [f"{pad}while ({format_expr(s.cond)}) {{", *_body(s.body, indent + 1), f"{pad}}}"]
    if isinstance(s, Return):
        lines = []
        if s.cleanup:
            lines.append(f"{pad}// cleanup after computing the return value:")
            for c in s.cleanup:
                lines += [f"{pad}//   {line.strip()}" for line in format_stmt(c)]
        value = f" {format_expr(s.value)}" if s.value is not None else ""
        return lines + [f"{pad}return{value};"]
    raise TypeError(f"not a statement: {s!r}")


def _body(b: Block, indent: int) -> list[str]:
    out: list[str] = []
    for s in b.stmts:
        out += format_stmt(s, indent)
    return out


def format_function(f: Function) -> str:
    lines = [_annotation(a) for a in f.annotations]
    params = []
    for p in f.params:
        prefix = ("const " if p.type.const else "") + ("&" if p.by_ref else "")
        params.append(f"{p.name}: {prefix}{p.type.name}")
    ret = f" -> {format_type(f.ret)}" if f.ret is not None else ""
    head = f"fn {f.name}({', '.join(params)}){ret}"
    if f.body is None:
        lines.append(f"extern {head};")
    else:
        lines += [f"{head} {{", *_body(f.body, 1), "}"]
    return "\n".join(lines)


def pretty_print(program: Program) -> str:
    parts = [f"global {g.name}: {format_type(g.type)};" for g in program.globals]
    chunks = []
    if parts:
        chunks.append("\n".join(parts))
    chunks += [format_function(f) for f in program.functions]
    return "\n\n".join(chunks) + ("\n" if chunks else "")

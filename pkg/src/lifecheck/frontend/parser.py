"""Recursive-descent parser producing :mod:`lifecheck.frontend.syntax` trees."""

from __future__ import annotations

from .lexer import ParseError, Token, tokenize
from .syntax import (
    Allocate, AddressOf, Annotation, Assign, BinOp, Block, Call, Create,
    Deallocate, Delete, Deref, Destroy, Expr, ExprStmt, Function, Global, If,
    IncDec, Index, IntLit, Let, MoveOf, Name, New, NullLit, Param, Program,
    Return, SPECIAL_TOKENS, SourceLoc, Stmt, TypeRef, UnaryOp, While,
    walk_expr,
)

MAX_NESTING = 100

BINARY_PREC = {
    "||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, ">": 4, "<=": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}


def parse_program(source: str, file: str = "<input>") -> Program:
    """Parse ``source``; raises :class:`ParseError` on malformed input."""
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(SourceLoc(file, 1, 1), f"input is not UTF-8: {exc.reason}") from None
    tokens, expectations, bad = tokenize(source, file)
    parser = _Parser(tokens)
    try:
        globals_, functions = parser.program()
    except RecursionError:
        raise ParseError(parser.peek().loc, "nesting too deep") from None
    return Program(
        tuple(globals_), tuple(functions),
        expectations=tuple(expectations), bad_trivia=tuple(bad),
        loc=SourceLoc(file, 1, 1),
    )


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.depth = 0

    # -- token helpers

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("op", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            t = self.peek()
            found = "end of input" if t.kind == "eof" else repr(t.text)
            raise ParseError(t.loc, f"expected {text!r}, found {found}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident":
            found = "end of input" if t.kind == "eof" else repr(t.text)
            raise ParseError(t.loc, f"expected {what}, found {found}")
        return self.advance()

    def nest(self):
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise ParseError(self.peek().loc, "nesting too deep")

    def unnest(self):
        self.depth -= 1

    # -- top level

    def program(self):
        globals_: list[Global] = []
        functions: list[Function] = []
        pending: list[Annotation] = []
        while self.peek().kind != "eof":
            if self.at("pre") or self.at("post"):
                pending.extend(self.annotation())
            elif self.at("fn") or self.at("extern"):
                functions.append(self.function(pending))
                pending = []
            elif self.at("global"):
                if pending:
                    raise ParseError(pending[0].loc, "annotation must precede a function")
                globals_.append(self.global_decl())
            else:
                t = self.peek()
                raise ParseError(t.loc, f"expected 'fn', 'extern', 'global' or an annotation, found {t.text!r}")
        if pending:
            raise ParseError(pending[0].loc, "annotation must precede a function")
        return globals_, functions

    def global_decl(self) -> Global:
        loc = self.expect("global").loc
        name = self.ident().text
        self.expect(":")
        ty = self.typeref()
        self.expect(";")
        return Global(name, ty, loc=loc)

    def typeref(self) -> TypeRef:
        const = self.accept("const")
        t = self.ident("type name")
        return TypeRef(t.text, const, loc=t.loc)

    def annotation(self) -> list[Annotation]:
        kw = self.advance()
        self.expect("(")
        out = []
        while True:
            target = self.ident("annotation target")
            self.expect(",")
            self.expect("{")
            lifetimes = []
            while not self.at("}"):
                t = self.peek()
                if t.kind == "ident" or (t.kind == "kw" and t.text in SPECIAL_TOKENS):
                    lifetimes.append(self.advance().text)
                else:
                    raise ParseError(t.loc, f"expected lifetime, found {t.text!r}")
                if not self.accept(","):
                    break
            self.expect("}")
            if not lifetimes:
                raise ParseError(target.loc, "lifetime set must not be empty")
            out.append(Annotation(kw.text, target.text, tuple(lifetimes), loc=kw.loc))
            if not self.accept(","):
                break
        self.expect(")")
        return out

    def function(self, annotations: list[Annotation]) -> Function:
        extern = self.accept("extern")
        loc = self.expect("fn").loc
        name = self.ident("function name").text
        self.expect("(")
        params: list[Param] = []
        seen: set[str] = set()
        while not self.at(")"):
            pt = self.ident("parameter name")
            if pt.text in seen:
                raise ParseError(pt.loc, f"duplicate parameter {pt.text!r}")
            seen.add(pt.text)
            self.expect(":")
            const = self.accept("const")
            by_ref = self.accept("&")
            const = self.accept("const") or const
            tn = self.ident("type name")
            params.append(Param(pt.text, TypeRef(tn.text, const, loc=tn.loc), by_ref, loc=pt.loc))
            if not self.accept(","):
                break
        self.expect(")")
        ret = self.typeref() if self.accept("->") else None
        pre_seen: set[str] = set()
        post_seen = False
        for a in annotations:
            if a.kind == "pre":
                if a.target not in seen:
                    raise ParseError(a.loc, f"precondition names unknown parameter {a.target!r}")
                if a.target in pre_seen:
                    raise ParseError(a.loc, f"duplicate precondition for {a.target!r}")
                pre_seen.add(a.target)
            else:
                if post_seen:
                    raise ParseError(a.loc, "duplicate postcondition")
                post_seen = True
        if extern:
            self.expect(";")
            body = None
        else:
            body = self.block()
        return Function(name, tuple(params), ret, tuple(annotations), body, loc=loc)

    # -- statements

    def block(self) -> Block:
        loc = self.expect("{").loc
        self.nest()
        stmts = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                raise ParseError(self.peek().loc, "expected '}', found end of input")
            stmts.append(self.statement())
        end = self.expect("}").loc
        self.unnest()
        return Block(tuple(stmts), loc=loc, end=end)

    def statement(self) -> Stmt:
        t = self.peek()
        loc = t.loc
        if self.at("{"):
            return self.block()
        if self.accept("let"):
            name = self.ident().text
            self.expect(":")
            ty = self.typeref()
            init = self.expr() if self.accept("=") else None
            if init is not None:
                self._check_rhs(init, Name(name, loc=loc))
            self.expect(";")
            return Let(name, ty, init, loc=loc)
        if self.accept("create"):
            self.expect("(")
            name = self.ident().text
            self.expect(",")
            ty = self.typeref()
            self.expect(")")
            self.expect(";")
            return Create(name, ty, loc=loc)
        if self.accept("destroy"):
            self.expect("(")
            name = self.ident().text
            self.expect(")")
            self.expect(";")
            return Destroy(name, loc=loc)
        if self.accept("deallocate"):
            self.expect("(")
            e = self.expr()
            self.expect(")")
            self.expect(";")
            self._no_alloc(e)
            return Deallocate(e, loc=loc)
        if self.accept("delete"):
            e = self.expr()
            self.expect(";")
            self._no_alloc(e)
            return Delete(e, loc=loc)
        if self.accept("if"):
            return self._if(loc)
        if self.accept("while"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self._no_alloc(cond)
            return While(cond, self.block(), loc=loc)
        if self.accept("return"):
            value = None if self.at(";") else self.expr()
            self.expect(";")
            if value is not None:
                self._no_alloc(value)
            return Return(value, loc=loc)
        e = self.expr()
        if self.at("=") or self.at("+=") or self.at("-="):
            op = self.advance().text
            if not isinstance(e, (Name, Deref, Index)):
                raise ParseError(e.loc, "left side of assignment is not assignable")
            value = self.expr()
            if op == "=":
                self._check_rhs(value, e)
            else:
                self._no_alloc(value)
            self._no_alloc(e)
            self.expect(";")
            return Assign(e, value, op, loc=loc)
        if not isinstance(e, (Call, IncDec)):
            raise ParseError(e.loc, "expression statement has no effect")
        self._no_alloc(e)
        self.expect(";")
        return ExprStmt(e, loc=loc)

    def _if(self, loc: SourceLoc) -> If:
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        self._no_alloc(cond)
        then = self.block()
        orelse = None
        if self.accept("else"):
            if self.at("if"):
                inner_loc = self.advance().loc
                self.nest()
                inner = self._if(inner_loc)
                self.unnest()
                orelse = Block((inner,), loc=inner_loc)
            else:
                orelse = self.block()
        return If(cond, then, orelse, loc=loc)

    def _check_rhs(self, value: Expr, target: Expr) -> None:
        if isinstance(value, (Allocate, New)):
            if not isinstance(target, Name):
                kw = "allocate" if isinstance(value, Allocate) else "new"
                raise ParseError(value.loc, f"{kw} result must be assigned to a variable")
            self._no_alloc(value.size)
        else:
            self._no_alloc(value)

    def _no_alloc(self, e: Expr) -> None:
        for sub in walk_expr(e):
            if isinstance(sub, (Allocate, New)):
                kw = "allocate" if isinstance(sub, Allocate) else "new"
                raise ParseError(sub.loc, f"{kw} may only appear as the whole right side of an assignment")

    # -- expressions

    def expr(self) -> Expr:
        self.nest()
        e = self.binary(1)
        self.unnest()
        return e

    def binary(self, min_prec: int) -> Expr:
        lhs = self.unary()
        while True:
            t = self.peek()
            prec = BINARY_PREC.get(t.text) if t.kind == "op" else None
            if prec is None or prec < min_prec:
                return lhs
            self.advance()
            rhs = self.binary(prec + 1)
            lhs = BinOp(t.text, lhs, rhs, loc=lhs.loc)

    def unary(self) -> Expr:
        t = self.peek()
        if t.kind == "op" and t.text in ("*", "-", "!", "++", "--"):
            self.advance()
            self.nest()
            operand = self.unary()
            self.unnest()
            if t.text == "*":
                return Deref(operand, loc=t.loc)
            if t.text in ("++", "--"):
                return IncDec(t.text, True, operand, loc=t.loc)
            return UnaryOp(t.text, operand, loc=t.loc)
        if self.accept("&"):
            name = self.ident("variable after '&'")
            return AddressOf(name.text, loc=t.loc)
        if self.accept("move"):
            name = self.ident("variable after 'move'")
            return MoveOf(name.text, loc=t.loc)
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.primary()
        while True:
            t = self.peek()
            if self.accept("["):
                idx = self.expr()
                self.expect("]")
                e = Index(e, idx, loc=e.loc)
            elif t.kind == "op" and t.text in ("++", "--"):
                self.advance()
                e = IncDec(t.text, False, e, loc=e.loc)
            else:
                return e

    def primary(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.advance()
            return IntLit(int(t.text), loc=t.loc)
        if self.accept("null"):
            return NullLit(loc=t.loc)
        if t.kind == "ident":
            self.advance()
            if self.accept("("):
                args = []
                while not self.at(")"):
                    args.append(self.expr())
                    if not self.accept(","):
                        break
                self.expect(")")
                return Call(t.text, tuple(args), loc=t.loc)
            return Name(t.text, loc=t.loc)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("["):
            e = self.expr()
            self.expect("]")
            return Deref(e, bracket=True, loc=t.loc)
        if self.at("allocate") or self.at("new"):
            self.advance()
            self.expect("(")
            size = self.expr()
            self.expect(")")
            return (Allocate if t.text == "allocate" else New)(size, loc=t.loc)
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(t.loc, f"expected expression, found {found}")

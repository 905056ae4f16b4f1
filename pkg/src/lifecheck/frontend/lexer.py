"""Tokenizer for `.lt` source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import Expectation, SourceLoc


class ParseError(Exception):
    def __init__(self, loc: SourceLoc, message: str):
        super().__init__(f"{loc}: error: {message}")
        self.loc = loc
        self.message = message


KEYWORDS = frozenset({
    "fn", "extern", "global", "let", "const", "if", "else", "while", "return",
    "create", "destroy", "allocate", "deallocate", "new", "delete", "move",
    "null", "invalid", "pre", "post",
})

# Longest operators first so that `->` wins over `-`.
PUNCT = (
    "->", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=",
    "(", ")", "{", "}", "[", "]", ",", ";", ":", "&", "*", "+", "-", "/",
    "%", "<", ">", "=", "!",
)

_TRIVIA = re.compile(
    r"^\s*(expect-error|known-fp)(?:@([+-]\d+))?\s*:\s*([A-Z]\d{3})\b\s*(.*?)\s*$"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "kw", "op", "eof"
    text: str
    loc: SourceLoc


def tokenize(source: str, file: str = "<input>"):
    """Split ``source`` into tokens; also returns expectation trivia.

    Returns ``(tokens, expectations, bad_trivia)``.
    """
    tokens: list[Token] = []
    expectations: list[Expectation] = []
    bad: list[tuple[SourceLoc, str]] = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r\f\v":
            i += 1
            col += 1
            continue
        loc = SourceLoc(file, line, col)
        if source.startswith("//", i):
            end = source.find("\n", i)
            if end < 0:
                end = n
            text = source[i + 2:end]
            _read_trivia(text, loc, expectations, bad)
            col += end - i
            i = end
            continue
        if c.isascii() and (c.isalpha() or c == "_"):
            j = i + 1
            while j < n and source[j].isascii() and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            tokens.append(Token("kw" if word in KEYWORDS else "ident", word, loc))
            col += j - i
            i = j
            continue
        if c.isascii() and c.isdigit():
            j = i + 1
            while j < n and source[j].isascii() and source[j].isdigit():
                j += 1
            tokens.append(Token("int", source[i:j], loc))
            col += j - i
            i = j
            continue
        for op in PUNCT:
            if source.startswith(op, i):
                tokens.append(Token("op", op, loc))
                i += len(op)
                col += len(op)
                break
        else:
            raise ParseError(loc, f"unexpected character {c!r}")
    tokens.append(Token("eof", "", SourceLoc(file, line, col)))
    return tokens, expectations, bad


def _read_trivia(text, loc, expectations, bad):
    stripped = text.strip()
    if not (stripped.startswith("expect-error") or stripped.startswith("known-fp")):
        return
    m = _TRIVIA.match(text)
    if m is None:
        bad.append((loc, stripped))
        return
    kind, offset, code, note = m.groups()
    target = loc.line + int(offset or 0)
    if target < 1:
        bad.append((loc, stripped))
        return
    expectations.append(Expectation(kind, target, code, note, loc=loc))

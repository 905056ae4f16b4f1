"""Diagnostic records and their text / JSON renderings."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .frontend.syntax import SourceLoc

CODES = {
    "E001": "dereference of invalid Pointer",
    "E002": "dereference of moved-from Owner",
    "E003": "pointer arithmetic",
    "E004": "bad call argument",
    "E005": "bad return value",
    "E100": "malformed annotation",
    "E101": "scope error",
    "E102": "unknown type",
    "E103": "malformed call",
    "W101": "possible null dereference",
    "W102": "call to unknown function",
}

# Codes reported by the front end; any of these stops the pipeline (exit 2).
FRONTEND_CODES = frozenset({"E100", "E101", "E102", "E103"})


@dataclass(frozen=True)
class Note:
    loc: SourceLoc
    message: str


@dataclass(frozen=True)
class Diagnostic:
    code: str
    loc: SourceLoc
    message: str
    notes: tuple[Note, ...] = ()
    severity_override: str | None = None

    @property
    def severity(self) -> str:
        if self.severity_override:
            return self.severity_override
        return "error" if self.code.startswith("E") else "warning"

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def sort_key(self):
        return (self.loc.file, self.loc.line, self.loc.column, self.code, self.message)


def sort_unique(diags) -> list[Diagnostic]:
    seen = set()
    out = []
    for d in sorted(diags, key=Diagnostic.sort_key):
        key = (d.sort_key(), d.notes)
        if key not in seen:
            seen.add(key)
            out.append(d)
    return out


_COLORS = {"error": "\x1b[1;31m", "warning": "\x1b[1;35m", "note": "\x1b[1;36m"}
_RESET = "\x1b[0m"


def render_text(d: Diagnostic, color: bool = False) -> str:
    def label(sev: str, text: str) -> str:
        return f"{_COLORS[sev]}{text}{_RESET}" if color else text

    head = f"{d.loc}: {label(d.severity, f'{d.severity}[{d.code}]')}: {d.message}"
    lines = [head]
    for n in d.notes:
        lines.append(f"{n.loc}: {label('note', 'note')}: {n.message}")
    return "\n".join(lines)


def to_dict(d: Diagnostic) -> dict:
    return {
        "code": d.code,
        "severity": d.severity,
        "file": d.loc.file,
        "line": d.loc.line,
        "column": d.loc.column,
        "message": d.message,
        "notes": [
            {"file": n.loc.file, "line": n.loc.line, "column": n.loc.column, "message": n.message}
            for n in d.notes
        ],
    }


def render_json(d: Diagnostic) -> str:
    return json.dumps(to_dict(d), sort_keys=True)

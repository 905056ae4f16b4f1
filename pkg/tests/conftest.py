from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
FACTS_PATH = CORPUS / "types.json"

sys.path.insert(0, str(Path(__file__).resolve().parent))

BRANCH_LOWERED = """\
fn main() {
    create(x, Value);
    create(p, Pointer);
    if (x == 2) {
        p = &x;
    } else {
        create(y, Value);
        p = &y;
        destroy(y);
    }
    *p = 3;
}
"""

BRANCH_SCOPED = """\
fn main() {
    let x: Value;
    let p: Pointer;
    if (x == 2) {
        p = &x;
    } else {
        let y: Value;
        p = &y;
    }
    *p = 3;
}
"""


@pytest.fixture(scope="session")
def corpus_facts():
    from lifecheck.typeclass import load_facts
    return load_facts(FACTS_PATH)


def analyze(source: str, facts=None, **opts):
    from lifecheck.pipeline import Options, analyze_source
    return analyze_source(source, "t.lt", facts, Options(**opts))


def codes(analysis) -> list[tuple[int, str]]:
    return [(d.loc.line, d.code) for d in analysis.diagnostics]

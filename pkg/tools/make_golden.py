"""Regenerate the frozen session traces for the bundled programs.

Run from the repository root:

    python3 tools/make_golden.py

Each canonical query is driven to completion and the resulting wire
records are written under src/clt/golden/.  The script refuses to write
a trace that disagrees with the registry's expected outcome, so a bad
engine change fails here instead of freezing a wrong file.
"""

from __future__ import annotations

import pathlib
import sys

SRC = pathlib.Path(__file__).resolve().parents[1] / "src"
sys.path.insert(0, str(SRC))

from clt.engine import Session, dump_records  # noqa: E402
from clt.library import PROGRAM_NAMES, bundled_program  # noqa: E402
from clt.syntax import parse_program, parse_query  # noqa: E402

GOLDEN = SRC / "clt" / "golden"


def drive(program, cq) -> list[dict]:
    session = Session(program, parse_query(cq.query, program))
    session.start()
    for pick in cq.moves:
        if session.pending is None:
            raise SystemExit(f"{cq.trace}: move {pick!r} has no pending request")
        session.apply_env_move(pick)
    if session.pending is not None:
        raise SystemExit(f"{cq.trace}: session is still waiting on the environment")
    out = session.outcome
    assert out is not None
    got = {"status": out.status,
           "bindings": dict(out.bindings),
           "outputs": list(out.outputs)}
    if got != cq.expected:
        raise SystemExit(f"{cq.trace}: expected {cq.expected}, got {got}")
    return session.records


def main() -> None:
    GOLDEN.mkdir(exist_ok=True)
    for name in PROGRAM_NAMES:
        bundle = bundled_program(name)
        program = parse_program(bundle.source)
        for cq in bundle.canonical_queries:
            records = drive(program, cq)
            path = GOLDEN / cq.trace
            path.write_text(dump_records(records), encoding="utf-8")
            print(f"wrote {path.relative_to(SRC.parent.parent)} ({len(records)} records)")


if __name__ == "__main__":
    main()

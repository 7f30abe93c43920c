"""Interpreter and playground for a task logic of choices, parallel play,
and linear resources."""

from .engine import (
    EngineError,
    LoadError,
    MoveError,
    Outcome,
    ReplayDivergence,
    Session,
    VerifyError,
    dump_records,
    load_records,
    replay,
    verify_winnable,
)
from .library import PROGRAM_NAMES, bundled_source, load_bundled
from .syntax import (
    ParseError,
    Program,
    parse_program,
    parse_query,
    parse_term,
    print_formula,
    print_term,
)

__version__ = "0.1.0"

__all__ = [
    "EngineError",
    "LoadError",
    "MoveError",
    "Outcome",
    "ParseError",
    "PROGRAM_NAMES",
    "Program",
    "ReplayDivergence",
    "Session",
    "VerifyError",
    "bundled_source",
    "dump_records",
    "load_bundled",
    "load_records",
    "parse_program",
    "parse_query",
    "parse_term",
    "print_formula",
    "print_term",
    "replay",
    "verify_winnable",
]

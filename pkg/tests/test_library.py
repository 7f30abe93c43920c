"""Bundled-program and oracle tests.

The object-level prover is audited two ways: by hand-derived cases fed
to the direct checker, and by playing the checker against the game
engine over a seeded corpus of random program/goal pairs.  The golden
trace files keep the wire format honest byte for byte.
"""

from importlib import resources

import pytest

from clt.engine import Session, dump_records, load_records, replay
from clt.formulas import AgentRef, Atom, Bang, CAnd, Imp
from clt.library import (
    PROGRAM_NAMES,
    OracleDepthError,
    bundled_program,
    bundled_source,
    horn_oracle,
    load_bundled,
    random_horn_pairs,
)
from clt.syntax import parse_program, parse_query, parse_term, print_term
from clt.terms import Sym, app


# ------------------------------------------------------------------- registry


def test_bundled_names_are_stable():
    assert PROGRAM_NAMES == ("factorial", "lottery", "fastfood", "horn")


@pytest.mark.parametrize("name", PROGRAM_NAMES)
def test_every_bundled_program_parses(name):
    prog = load_bundled(name)
    assert prog.agents


def test_unknown_bundle_name_is_rejected():
    with pytest.raises(ValueError, match="no bundled program"):
        bundled_source("fibonacci")


def test_factorial_agent_is_a_reusable_conjunction():
    prog = load_bundled("factorial")
    body = prog.agents["c"]
    assert isinstance(body, Bang)
    assert isinstance(body.body, CAnd)
    assert isinstance(body.body.left, Atom)


def test_prover_offers_seven_alternatives():
    prog = load_bundled("horn")
    body = prog.agents["prover"]
    assert isinstance(body, Bang)

    def leaves(f):
        if isinstance(f, CAnd):
            return leaves(f.left) + leaves(f.right)
        return [f]

    assert len(leaves(body.body)) == 7


# ------------------------------------------------------- oracle, hand-derived


def oracle(d, g, **kw):
    return horn_oracle(parse_term(d), parse_term(g), **kw)


def test_oracle_identity():
    assert oracle("p(a)", "p(a)") is True


def test_oracle_distinct_atoms():
    assert oracle("p(a)", "p(b)") is False


def test_oracle_existential_witness():
    assert oracle("p(a)", "some(\\x. p(x))") is True
    assert oracle("q(b)", "some(\\x. p(x))") is False


def test_oracle_modus_ponens():
    assert oracle("and(p(a), imp(p(a), q(b)))", "q(b)") is True
    assert oracle("and(p(b), imp(p(a), q(b)))", "q(b)") is False


def test_oracle_universal_clause():
    assert oracle("all(\\x. p(x))", "p(b)") is True


def test_oracle_conjunctive_goal():
    assert oracle("and(p(a), q(b))", "and(q(b), p(a))") is True


def test_oracle_gives_up_on_self_support():
    # the only way to prove p(a) is to already have proved p(a); the
    # search must report the question undecided, not loop or say no
    with pytest.raises(OracleDepthError):
        oracle("imp(p(a), p(a))", "p(a)", depth=12)


def test_corpus_is_deterministic_in_seed():
    a = random_horn_pairs(30, seed=7)
    b = random_horn_pairs(30, seed=7)
    assert [(print_term(d), print_term(g)) for d, g in a] == \
           [(print_term(d), print_term(g)) for d, g in b]
    c = random_horn_pairs(30, seed=8)
    assert [(print_term(d), print_term(g)) for d, g in a] != \
           [(print_term(d), print_term(g)) for d, g in c]


# ----------------------------------------------- engine vs oracle equivalence


def engine_proves(prog, d, g):
    """True/False verdict from the game engine, None when limited."""
    goal = Atom(app(Sym("pv"), d, g))
    s = Session(prog, Imp(AgentRef("prover"), goal),
                max_depth=64, max_steps=8000)
    s.start()
    assert s.pending is None, "prover games never consult the environment"
    if s.outcome.status == "resource-limit":
        return None
    return s.outcome.status == "won"


def oracle_proves(d, g):
    try:
        return horn_oracle(d, g)
    except OracleDepthError:
        return None


def test_engine_agrees_with_oracle_on_random_corpus():
    prog = load_bundled("horn")
    pairs = random_horn_pairs(200, seed=2026)
    limited, proved = 0, 0
    for d, g in pairs:
        got = engine_proves(prog, d, g)
        want = oracle_proves(d, g)
        if got is None or want is None:
            limited += 1
            continue
        assert got == want, (
            f"engine says {got}, oracle says {want} for "
            f"{print_term(d)} |- {print_term(g)}")
        proved += got
    assert limited < 10, f"{limited} of 200 pairs hit limits"
    assert proved >= 20, "corpus is too easy to be informative"


# ------------------------------------------------------ encoding cross-checks


def first_backchain_rules(query):
    prog = load_bundled("horn")
    s = Session(prog, parse_query(query, prog))
    s.start()
    assert s.outcome.status == "won"
    return [r["event"]["rule"] for r in s.records
            if r["type"] == "event" and r["event"]["move"] == "backchain"]


def test_atomic_goal_routes_through_the_atom_rule():
    rules = first_backchain_rules("?- prover -> pv(p(a), p(a)).")
    assert rules[0] == 4


def test_conjunctive_goal_splits_before_matching():
    rules = first_backchain_rules(
        "?- prover -> pv(and(p(a), q(b)), and(q(b), p(a))).")
    assert rules[0] == 5


def test_existential_goal_instantiates_a_witness():
    prog = load_bundled("horn")
    s = Session(prog, parse_query("?- prover -> pv(p(a), some(\\x.p(x))).", prog))
    s.start()
    bc = [r["event"] for r in s.records
          if r["type"] == "event" and r["event"]["move"] == "backchain"]
    assert bc[0]["rule"] == 6
    assert bc[0]["unifier"]["X"] == "a"
    assert any(e["goal"] == "pv(p(a), p(a))" for e in bc)


# -------------------------------------------------------------- golden traces


def run_canonical(name, cq):
    prog = load_bundled(name)
    s = Session(prog, parse_query(cq.query, prog))
    s.start()
    for m in cq.moves:
        assert s.pending is not None, f"no pending request before move {m!r}"
        s.apply_env_move(m)
    assert s.pending is None, "canonical move scripts answer every request"
    return s


def canonical_cases():
    return [pytest.param(name, cq, id=cq.trace.removesuffix(".jsonl"))
            for name in PROGRAM_NAMES
            for cq in bundled_program(name).canonical_queries]


@pytest.mark.parametrize("name,cq", canonical_cases())
def test_canonical_query_reaches_its_outcome(name, cq):
    s = run_canonical(name, cq)
    out = s.outcome
    assert {"status": out.status,
            "bindings": dict(out.bindings),
            "outputs": list(out.outputs)} == cq.expected


@pytest.mark.parametrize("name,cq", canonical_cases())
def test_canonical_query_matches_golden_trace(name, cq):
    frozen = resources.files("clt").joinpath(f"golden/{cq.trace}").read_text("utf-8")
    s = run_canonical(name, cq)
    assert dump_records(s.records) == frozen


@pytest.mark.parametrize("name,cq", canonical_cases())
def test_golden_trace_replays_cleanly(name, cq):
    frozen = resources.files("clt").joinpath(f"golden/{cq.trace}").read_text("utf-8")
    prog = load_bundled(name)
    replay(prog, parse_query(cq.query, prog), load_records(frozen))

"""Bundled programs and the independent Horn checker used to audit them.

The `.clt` sources under programs/ ship with the package; each carries a
registry entry naming the queries it is meant to answer and the outcome
every replay must reproduce.  `horn_oracle` decides the same object-level
provability relation as the bundled prover but by direct recursion, so
the two implementations can be played against each other.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources

from .syntax import Program, parse_program, parse_term
from .terms import (
    App,
    MetaSource,
    Subst,
    Sym,
    Term,
    UnifyError,
    normalize,
    spine,
    unify,
)

ORACLE_DEPTH = 64


class OracleDepthError(Exception):
    code = "oracle-depth"


@dataclass(frozen=True, slots=True)
class CanonicalQuery:
    query: str
    moves: tuple[str, ...]
    expected: dict  # status, and when stated: bindings, outputs
    trace: str  # golden trace file under golden/


@dataclass(frozen=True, slots=True)
class BundledProgram:
    name: str
    source: str
    canonical_queries: tuple[CanonicalQuery, ...]


_CANONICAL: dict[str, tuple[CanonicalQuery, ...]] = {
    "factorial": (
        CanonicalQuery("?- c -> @Y.#Z.fac(Y, Z).", ("5",),
                       {"status": "won", "bindings": {"Z": "120"}, "outputs": []},
                       "factorial_y5.jsonl"),
        CanonicalQuery("?- c -> @Y.#Z.fac(Y, Z).", ("0",),
                       {"status": "won", "bindings": {"Z": "1"}, "outputs": []},
                       "factorial_y0.jsonl"),
    ),
    "lottery": (
        CanonicalQuery("?- t.", ("left",),
                       {"status": "won", "bindings": {}, "outputs": ["v(0)"]},
                       "lottery_left.jsonl"),
        CanonicalQuery("?- t.", ("right",),
                       {"status": "won", "bindings": {}, "outputs": ["v(1000000)"]},
                       "lottery_right.jsonl"),
    ),
    "fastfood": (
        CanonicalQuery("?- c /\\ d.", ("5", "6"),
                       {"status": "won", "bindings": {},
                        "outputs": ["m(ham)", "m(coke)", "m(2)",
                                    "m(fi)", "m(coke)", "m(2)"]},
                       "fastfood_pay5_pay6.jsonl"),
        CanonicalQuery("?- c.", ("2",),
                       {"status": "won", "bindings": {}, "outputs": []},
                       "fastfood_pay2.jsonl"),
    ),
    "horn": (
        CanonicalQuery("?- prover -> pv(p(a), some(\\x.p(x))).", (),
                       {"status": "won", "bindings": {}, "outputs": []},
                       "horn_witness.jsonl"),
        CanonicalQuery("?- prover -> pv(and(p(a), q(b)), and(q(b), p(a))).", (),
                       {"status": "won", "bindings": {}, "outputs": []},
                       "horn_split.jsonl"),
        CanonicalQuery("?- prover -> pv(p(a), p(b)).", (),
                       {"status": "lost", "bindings": {}, "outputs": []},
                       "horn_unprovable.jsonl"),
    ),
}

PROGRAM_NAMES = tuple(_CANONICAL)


def bundled_source(name: str) -> str:
    if name not in _CANONICAL:
        raise ValueError(f"no bundled program named {name!r}")
    return resources.files(__package__).joinpath(f"programs/{name}.clt").read_text("utf-8")


def bundled_program(name: str) -> BundledProgram:
    return BundledProgram(name, bundled_source(name), _CANONICAL[name])


def load_bundled(name: str) -> Program:
    return parse_program(bundled_source(name))


# ---------------------------------------------------------- direct Horn check

_AND = Sym("and")
_IMP = Sym("imp")
_ALL = Sym("all")
_SOME = Sym("some")
_CONNECTIVES = (_AND, _IMP, _ALL, _SOME)


def horn_oracle(d: Term, g: Term, depth: int = ORACLE_DEPTH,
                max_steps: int = 50_000) -> bool:
    """Does object program `d` prove object goal `g`?

    Direct recursive search, not routed through the game engine, over
    the same unification.  A branch deeper than `depth` (or a search
    wider than `max_steps` nodes) is abandoned; if no proof is found
    after an abandonment the question is undecided and OracleDepthError
    is raised.
    """
    metas = MetaSource()
    hit = False
    steps = 0

    def spent() -> bool:
        nonlocal hit, steps
        steps += 1
        if steps > max_steps:
            hit = True
            return True
        return False

    def prove(g: Term, s: Subst, k: int):
        nonlocal hit
        if k < 0:
            hit = True
            return
        if spent():
            return
        gn = normalize(g, s)
        head, args = spine(gn)
        if head == _AND and len(args) == 2:
            for s1 in prove(args[0], s, k - 1):
                yield from prove(args[1], s1, k - 1)
        elif head == _SOME and len(args) == 1:
            yield from prove(App(args[0], metas.fresh("x")), s, k - 1)
        elif isinstance(head, Sym) and head not in _CONNECTIVES:
            yield from chain(d, gn, s, k - 1)

    def chain(c: Term, a: Term, s: Subst, k: int):
        nonlocal hit
        if k < 0:
            hit = True
            return
        if spent():
            return
        cn = normalize(c, s)
        head, args = spine(cn)
        if head == _AND and len(args) == 2:
            yield from chain(args[0], a, s, k - 1)
            yield from chain(args[1], a, s, k - 1)
        elif head == _ALL and len(args) == 1:
            yield from chain(App(args[0], metas.fresh("x")), a, s, k - 1)
        elif head == _IMP and len(args) == 2:
            try:
                s1 = unify(args[1], a, s)
            except UnifyError:
                return
            yield from prove(args[0], s1, k - 1)
        else:
            try:
                yield unify(cn, a, s)
            except UnifyError:
                return

    for _ in prove(g, {}, depth):
        return True
    if hit:
        raise OracleDepthError("proof search depth exhausted")
    return False


# ------------------------------------------------------------- random corpus


def random_horn_pairs(n: int, seed: int) -> list[tuple[Term, Term]]:
    """Seeded (program, goal) pairs of small object formulas.

    Programs hold at most 4 clauses, formulas nest at most 3 deep, over
    predicates p/1, q/1, r/0 and constants a, b.  Deterministic in seed.
    """
    rng = random.Random(seed)
    pairs = []
    for _ in range(n):
        clauses = [_clause(rng, 3, []) for _ in range(rng.randint(1, 4))]
        d = clauses[0]
        for c in clauses[1:]:
            d = f"and({d}, {c})"
        g = _goal(rng, 3, [])
        pairs.append((parse_term(d), parse_term(g)))
    return pairs


def _obj_atom(rng: random.Random, bound: list[str], avoid: str | None = None) -> str:
    args = ["a", "b"] + bound
    preds = ["r", "p", "p", "q", "q"]
    if avoid is not None and rng.random() < 0.85:
        preds = [x for x in preds if x != avoid] or preds
    pred = rng.choice(preds)
    if pred == "r":
        return "r"
    return f"{pred}({rng.choice(args)})"


def _goal(rng: random.Random, depth: int, bound: list[str], avoid: str | None = None) -> str:
    if depth == 0 or rng.random() < 0.45:
        return _obj_atom(rng, bound, avoid)
    if rng.random() < 0.6:
        return (f"and({_goal(rng, depth - 1, bound, avoid)}, "
                f"{_goal(rng, depth - 1, bound, avoid)})")
    v = f"x{len(bound)}"
    return f"some(\\{v}. {_goal(rng, depth - 1, bound + [v], avoid)})"


def _clause(rng: random.Random, depth: int, bound: list[str]) -> str:
    if depth == 0 or rng.random() < 0.4:
        return _obj_atom(rng, bound)
    roll = rng.random()
    if roll < 0.55:
        head = _obj_atom(rng, bound)
        # a premise naming the head's own predicate invites proof loops;
        # keep those rare so limit outcomes stay a sliver of the corpus
        pred = head.split("(", 1)[0]
        return f"imp({_goal(rng, depth - 1, bound, avoid=pred)}, {head})"
    v = f"x{len(bound)}"
    return f"all(\\{v}. {_clause(rng, depth - 1, bound + [v])})"

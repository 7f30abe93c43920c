"""Formula syntax trees.

A formula is a game: atoms and agent references are the leaves, the
connectives say who gets to move.  Choice connectives (CAnd, COr and the
quantifier forms CUni, CExi) are resolved by a single irreversible pick;
parallel connectives (PAnd, POr) run both sides together.  Bang marks a
reusable resource and Imp turns a resource into a goal obligation.

Every node carries an identity (`nid`) that is unique within the process.
Identities never affect equality; the engine uses them to tell choice
sites apart.  Choice nodes may also carry a prompt string shown when the
environment is asked to move.  Prompts are ignored by equality as well.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .terms import FVar, Lam, Term, Var, fvars, subst_fvars

_ids = itertools.count(1)


def _nid() -> int:
    return next(_ids)


class Formula:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    term: Term
    nid: int = field(default_factory=_nid, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class AgentRef(Formula):
    name: str
    nid: int = field(default_factory=_nid, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Imp(Formula):
    left: Formula
    right: Formula
    nid: int = field(default_factory=_nid, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class PAnd(Formula):
    left: Formula
    right: Formula
    nid: int = field(default_factory=_nid, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class POr(Formula):
    left: Formula
    right: Formula
    nid: int = field(default_factory=_nid, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class CAnd(Formula):
    left: Formula
    right: Formula
    prompt: str | None = field(default=None, compare=False)
    nid: int = field(default_factory=_nid, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class COr(Formula):
    left: Formula
    right: Formula
    prompt: str | None = field(default=None, compare=False)
    nid: int = field(default_factory=_nid, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class CUni(Formula):
    var: str
    body: Formula
    prompt: str | None = field(default=None, compare=False)
    nid: int = field(default_factory=_nid, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class CExi(Formula):
    var: str
    body: Formula
    prompt: str | None = field(default=None, compare=False)
    nid: int = field(default_factory=_nid, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Bang(Formula):
    body: Formula
    nid: int = field(default_factory=_nid, compare=False, repr=False)


BINARY = (Imp, PAnd, POr, CAnd, COr)
BINDERS = (CUni, CExi)


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, BINARY):
        return (f.left, f.right)
    if isinstance(f, BINDERS):
        return (f.body,)
    if isinstance(f, Bang):
        return (f.body,)
    return ()


def with_children(f: Formula, kids: tuple[Formula, ...]) -> Formula:
    """Rebuild `f` with new children, keeping prompts and binder names."""
    if isinstance(f, (Imp, PAnd, POr)):
        return type(f)(kids[0], kids[1])
    if isinstance(f, (CAnd, COr)):
        return type(f)(kids[0], kids[1], f.prompt)
    if isinstance(f, BINDERS):
        return type(f)(f.var, kids[0], f.prompt)
    if isinstance(f, Bang):
        return Bang(kids[0])
    assert not kids
    return f


def free_formula_vars(f: Formula) -> set[str]:
    """Formula-variable names not bound by any enclosing CUni or CExi."""
    out: set[str] = set()

    def walk(g: Formula, bound: frozenset[str]) -> None:
        if isinstance(g, Atom):
            out.update(fvars(g.term) - bound)
        elif isinstance(g, BINDERS):
            walk(g.body, bound | {g.var})
        else:
            for kid in children(g):
                walk(kid, bound)

    walk(f, frozenset())
    return out


def subst_formula(f: Formula, mapping: dict[str, Term]) -> Formula:
    """Replace free formula variables by closed terms, respecting shadowing."""
    if not mapping:
        return f
    if isinstance(f, Atom):
        return Atom(subst_fvars(f.term, mapping))
    if isinstance(f, BINDERS):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        if not inner:
            return f
        return type(f)(f.var, subst_formula(f.body, inner), f.prompt)
    kids = children(f)
    if not kids:
        return f
    return with_children(f, tuple(subst_formula(k, mapping) for k in kids))


def _term_alpha_eq(a: Term, b: Term, enva: dict[str, int], envb: dict[str, int]) -> bool:
    if isinstance(a, FVar) and isinstance(b, FVar):
        da, db = enva.get(a.name), envb.get(b.name)
        if da is None and db is None:
            return a.name == b.name
        return da == db
    if type(a) is not type(b):
        return False
    if isinstance(a, Lam):
        return _term_alpha_eq(a.body, b.body, enva, envb)
    if isinstance(a, Var):
        return a.index == b.index
    if hasattr(a, "fn"):
        return _term_alpha_eq(a.fn, b.fn, enva, envb) and _term_alpha_eq(a.arg, b.arg, enva, envb)
    return a == b


def formula_alpha_eq(a: Formula, b: Formula) -> bool:
    """Equality up to renaming of CUni/CExi binders; prompts ignored."""

    def walk(x: Formula, y: Formula, envx: dict[str, int], envy: dict[str, int], depth: int) -> bool:
        if type(x) is not type(y):
            return False
        if isinstance(x, Atom):
            return _term_alpha_eq(x.term, y.term, envx, envy)
        if isinstance(x, AgentRef):
            return x.name == y.name
        if isinstance(x, BINDERS):
            ex = dict(envx)
            ey = dict(envy)
            ex[x.var] = depth
            ey[y.var] = depth
            return walk(x.body, y.body, ex, ey, depth + 1)
        kx, ky = children(x), children(y)
        return all(walk(cx, cy, envx, envy, depth) for cx, cy in zip(kx, ky))

    return walk(a, b, {}, {}, 0)

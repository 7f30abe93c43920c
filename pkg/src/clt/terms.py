"""Lambda terms and the operations the interpreter builds on.

Bound variables are positional (an index counts enclosing binders, innermost
first); the surface name survives only as a printing hint. Variables bound by
surrounding formula-level binders appear down here as named FVar leaves, which
behave like rigid constants. Metavariables stand for as yet unknown closed
terms and are solved by unification.
"""
from __future__ import annotations

from dataclasses import dataclass, field

ARITH_OPS = ("+", "-", "*")
COMPARE_OP = ">="
DEFAULT_REDUCTION_LIMIT = 100_000

Subst = dict[int, "Term"]


class TermError(Exception):
    """Base for term-layer failures; `code` is the stable error name."""

    code = "term"


class ReductionLimitError(TermError):
    code = "reduction-limit"


class UnifyError(TermError):
    code = "unify"


class ClashError(UnifyError):
    code = "clash"


class OccursError(UnifyError):
    code = "occurs"


class NonPatternError(UnifyError):
    code = "non-pattern"


class Term:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Var(Term):
    """Reference to an enclosing binder, de Bruijn style."""

    index: int


@dataclass(frozen=True, slots=True)
class FVar(Term):
    """Occurrence of a formula-level bound variable, rigid at this layer."""

    name: str


@dataclass(frozen=True, slots=True)
class Sym(Term):
    name: str


@dataclass(frozen=True, slots=True)
class Int(Term):
    value: int


@dataclass(frozen=True, slots=True)
class Lam(Term):
    body: Term
    hint: str = field(default="x", compare=False)


@dataclass(frozen=True, slots=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True, slots=True)
class Meta(Term):
    ident: int
    hint: str = field(default="", compare=False)


class MetaSource:
    """Hands out metavariables with process-unique idents."""

    def __init__(self, start: int = 0) -> None:
        self._next = start

    def fresh(self, hint: str = "") -> Meta:
        self._next += 1
        return Meta(self._next, hint)


def app(fn: Term, *args: Term) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Split nested application into head and argument list."""
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def shift(t: Term, by: int, cutoff: int = 0) -> Term:
    """Add `by` to every variable index at or above `cutoff`."""
    if isinstance(t, Var):
        return Var(t.index + by) if t.index >= cutoff else t
    if isinstance(t, Lam):
        return Lam(shift(t.body, by, cutoff + 1), t.hint)
    if isinstance(t, App):
        return App(shift(t.fn, by, cutoff), shift(t.arg, by, cutoff))
    return t


def metas(t: Term) -> set[int]:
    out: set[int] = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Meta):
            out.add(x.ident)
        elif isinstance(x, Lam):
            stack.append(x.body)
        elif isinstance(x, App):
            stack.append(x.fn)
            stack.append(x.arg)
    return out


def fvars(t: Term) -> set[str]:
    """Names of formula-level variables occurring in the term."""
    out: set[str] = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, FVar):
            out.add(x.name)
        elif isinstance(x, Lam):
            stack.append(x.body)
        elif isinstance(x, App):
            stack.append(x.fn)
            stack.append(x.arg)
    return out


def subst_fvars(t: Term, mapping: dict[str, Term]) -> Term:
    """Replace formula-level variables by closed terms."""
    if not mapping:
        return t
    if isinstance(t, FVar):
        return mapping.get(t.name, t)
    if isinstance(t, Lam):
        return Lam(subst_fvars(t.body, mapping), t.hint)
    if isinstance(t, App):
        return App(subst_fvars(t.fn, mapping), subst_fvars(t.arg, mapping))
    return t


def is_ground(t: Term) -> bool:
    """No metavariables and no formula-level variables left."""
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, (Meta, FVar)):
            return False
        if isinstance(x, Lam):
            stack.append(x.body)
        elif isinstance(x, App):
            stack.append(x.fn)
            stack.append(x.arg)
    return True


def alpha_eq(a: Term, b: Term) -> bool:
    """Structural equality; binder hints do not participate."""
    return a == b


def substitute(t: Term, s: Subst) -> Term:
    """Replace metavariables by their images, single pass.

    Free variable indices inside an image keep referring to the context of
    the whole term: they are shifted across any binders crossed on the way
    in, so capture cannot happen.
    """
    if not s:
        return t
    return _subst(t, s, 0)


def _subst(t: Term, s: Subst, depth: int) -> Term:
    if isinstance(t, Meta):
        image = s.get(t.ident)
        if image is None:
            return t
        # images are closed, so no shift; they may mention other bound
        # metavariables, so resolve through the chain
        return _subst(image, s, 0)
    if isinstance(t, Lam):
        return Lam(_subst(t.body, s, depth + 1), t.hint)
    if isinstance(t, App):
        return App(_subst(t.fn, s, depth), _subst(t.arg, s, depth))
    return t


def normalize(t: Term, subst: Subst | None = None, limit: int = DEFAULT_REDUCTION_LIMIT) -> Term:
    """Beta-normalize and fold ground arithmetic, within a step budget."""
    if subst:
        t = substitute(t, subst)
    return _norm(t, [limit])


def _spend(budget: list[int]) -> None:
    budget[0] -= 1
    if budget[0] < 0:
        raise ReductionLimitError("reduction budget exhausted")


def _norm(t: Term, budget: list[int]) -> Term:
    # the head-reduction step loops rather than recurses: a divergent
    # term must exhaust the budget, not the interpreter stack
    while True:
        if isinstance(t, Lam):
            return Lam(_norm(t.body, budget), t.hint)
        if not isinstance(t, App):
            return t
        fn = _norm(t.fn, budget)
        if isinstance(fn, Lam):
            _spend(budget)
            t = _beta(fn.body, t.arg)
            continue
        break
    arg = _norm(t.arg, budget)
    if isinstance(arg, Int) and isinstance(fn, App):
        op = fn.fn
        if isinstance(op, Sym) and op.name in ARITH_OPS and isinstance(fn.arg, Int):
            _spend(budget)
            x, y = fn.arg.value, arg.value
            if op.name == "+":
                return Int(x + y)
            if op.name == "-":
                return Int(x - y)
            return Int(x * y)
    return App(fn, arg)


def _beta(body: Term, arg: Term) -> Term:
    return _replace(body, 0, arg)


def _replace(t: Term, depth: int, arg: Term) -> Term:
    if isinstance(t, Var):
        if t.index == depth:
            return shift(arg, depth)
        if t.index > depth:
            return Var(t.index - 1)
        return t
    if isinstance(t, Lam):
        return Lam(_replace(t.body, depth + 1, arg), t.hint)
    if isinstance(t, App):
        return App(_replace(t.fn, depth, arg), _replace(t.arg, depth, arg))
    return t


# ---------------------------------------------------------------------------
# unification
#
# First-order structural unification plus the flex cases where a metavariable
# is applied to distinct bound variables. Substitutions stay idempotent:
# every new binding is composed into the existing ones.


class _Scope(Exception):
    """Abstraction hit a bound variable the metavariable may not see."""


def unify(a: Term, b: Term, subst: Subst | None = None, limit: int = DEFAULT_REDUCTION_LIMIT) -> Subst:
    """Most general unifier extending `subst`, or a UnifyError.

    Inputs are expected normalized; intermediate terms are renormalized as
    bindings land. ClashError means definitely not unifiable, OccursError a
    cyclic solution, NonPatternError a problem outside the solved fragment.
    """
    s: Subst = dict(subst) if subst else {}
    budget = [limit]
    _unify(a, b, s, budget)
    return s


def _resolve(t: Term, s: Subst, budget: list[int]) -> Term:
    return _norm(substitute(t, s), budget)


def _spine_head(t: Term) -> Term:
    while isinstance(t, App):
        t = t.fn
    return t


def _deref(t: Term, s: Subst, budget: list[int]) -> Term:
    # rebuild only when new bindings can change this node's head; full
    # resolution at every recursion level is quadratic on long problems
    if s and isinstance(h := _spine_head(t), Meta) and h.ident in s:
        return _resolve(t, s, budget)
    return t


def _unify(a: Term, b: Term, s: Subst, budget: list[int]) -> None:
    a = _deref(a, s, budget)
    b = _deref(b, s, budget)
    if a == b:
        return
    ahead, aargs = spine(a)
    bhead, bargs = spine(b)
    if isinstance(ahead, Meta):
        _solve_flex(ahead, aargs, b, bhead, s, budget)
        return
    if isinstance(bhead, Meta):
        _solve_flex(bhead, bargs, a, ahead, s, budget)
        return
    if isinstance(a, Lam) and isinstance(b, Lam):
        _unify(a.body, b.body, s, budget)
        return
    if isinstance(a, App) and isinstance(b, App):
        _unify(a.fn, b.fn, s, budget)
        _unify(a.arg, b.arg, s, budget)
        return
    raise ClashError(f"cannot unify {a!r} with {b!r}")


def _solve_flex(m: Meta, args: list[Term], rhs: Term, rhs_head: Term, s: Subst, budget: list[int]) -> None:
    seen: list[int] = []
    for x in args:
        x = _deref(x, s, budget)
        if not isinstance(x, Var) or x.index in seen:
            raise NonPatternError(f"metavariable applied to non-pattern arguments: {args!r}")
        seen.append(x.index)
    rhs = _resolve(rhs, s, budget)
    rhs_head = _spine_head(rhs)
    if isinstance(rhs_head, Meta) and rhs_head.ident == m.ident:
        # same head, differing arguments; solving would need pruning
        raise NonPatternError("flex-flex pair with shared head")
    if m.ident in metas(rhs):
        raise OccursError(f"metavariable {m.ident} occurs in its own image")
    try:
        image = _lambda_abstract(rhs, seen)
    except _Scope:
        if isinstance(rhs_head, Meta):
            raise NonPatternError("flex-flex pair needs pruning") from None
        raise ClashError(f"solution for metavariable {m.ident} would escape its scope") from None
    _bind(m, image, s)


def _lambda_abstract(t: Term, idxs: list[int]) -> Term:
    """Close `t` over the problem binders listed in `idxs`."""
    n = len(idxs)

    def go(t: Term, depth: int) -> Term:
        if isinstance(t, Var):
            if t.index < depth:
                return t
            outer = t.index - depth
            if outer not in idxs:
                raise _Scope()
            pos = idxs.index(outer)
            return Var(depth + (n - 1 - pos))
        if isinstance(t, Lam):
            return Lam(go(t.body, depth + 1), t.hint)
        if isinstance(t, App):
            return App(go(t.fn, depth), go(t.arg, depth))
        return t

    body = go(t, 0)
    for _ in range(n):
        body = Lam(body)
    return body


def _bind(m: Meta, image: Term, s: Subst) -> None:
    # bindings stay as written; resolution chases the chain lazily
    s[m.ident] = image

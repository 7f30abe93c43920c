"""Game engine: plays a query against a program.

A session walks one play of the game.  The environment owns every CAnd
and CUni decision on the goal side and every COr and CExi decision on
the resource side; its picks are irreversible and arrive through
`apply_env_move`.  Between env moves the machine searches depth-first
for a winning continuation over the store: matching atoms (linear ones
are consumed), backchaining on rules, firing rules forward to derive new
facts, emitting declared outputs, and deciding ground builtin checks.

The machine's own moves are tentative until the play ends: the committed
record stream holds env requests and answers as they happen, and the
machine's move events only once a terminal state is reached, taken from
the surviving search path.  Re-running the search after each env answer
replays committed answers by position; each answer is bound to the
choice site it was given for, and any search branch that reaches a
different site first is abandoned.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

from .formulas import (
    AgentRef,
    Atom,
    Bang,
    CAnd,
    CExi,
    COr,
    CUni,
    Formula,
    Imp,
    PAnd,
    POr,
    children,
    subst_formula,
    with_children,
)
from .syntax import ParseError, Program, parse_term, print_formula, print_term
from .terms import (
    App,
    Int,
    Lam,
    Meta,
    MetaSource,
    ReductionLimitError,
    Subst,
    Sym,
    Term,
    UnifyError,
    is_ground,
    normalize,
    spine,
    subst_fvars,
    substitute,
    unify,
)

DEFAULT_MAX_FIRES = 512
DEFAULT_MAX_DEPTH = 256
DEFAULT_MAX_STEPS = 200_000

_OBJECT_CONNECTIVES = frozenset({"and", "imp", "all", "some"})


class EngineError(Exception):
    code = "engine"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class LoadError(EngineError):
    code = "load"


class MoveError(EngineError):
    code = "invalid-move"


class VerifyError(EngineError):
    code = "verify"


class ReplayDivergence(EngineError):
    code = "replay-divergence"


@dataclass(frozen=True, slots=True)
class Rule:
    binders: tuple[str, ...]
    antecedent: Formula | None
    consequents: tuple[Term, ...]
    source: str
    # precomputed screens for the solver's hot loop
    cons_heads: tuple[str | None, ...] = ()
    fireable: bool = False
    store_free: bool = False


@dataclass(frozen=True, slots=True)
class Store:
    linear: tuple[Term, ...] = ()
    reusable: tuple[Term, ...] = ()
    rules: tuple[Rule, ...] = ()

    def add_linear(self, atoms) -> "Store":
        return Store(self.linear + tuple(atoms), self.reusable, self.rules)

    def without_linear(self, idx: int) -> "Store":
        return Store(self.linear[:idx] + self.linear[idx + 1:], self.reusable, self.rules)

    def add_reusable(self, atom: Term) -> "Store":
        if atom in self.reusable:
            return self
        return Store(self.linear, self.reusable + (atom,), self.rules)

    def add_rules(self, rules) -> "Store":
        return Store(self.linear, self.reusable, self.rules + tuple(rules))


class PS(NamedTuple):
    """State threaded along one search path."""

    subst: Subst
    store: Store
    fires: int
    used: int  # env answers consumed so far on this path
    events: tuple
    outputs: tuple[Term, ...]

    def ev(self, *event) -> "PS":
        return self._replace(events=self.events + (event,))


_PS0 = PS({}, Store(), 0, 0, (), ())


@dataclass(frozen=True, slots=True)
class Answer:
    site: int
    branch: str | None = None
    value: Term | None = None


class NeedEnv(Exception):
    def __init__(self, *, site, kind, prompt, snapshot, options=None, var=None):
        super().__init__(prompt)
        self.site = site
        self.kind = kind
        self.prompt = prompt
        self.snapshot = snapshot
        self.options = options
        self.var = var


class _Run:
    def __init__(self, program: Program, answers: list[Answer], k: int,
                 max_depth: int, max_steps: int):
        self.program = program
        self.answers = answers
        self.k = k
        self.max_depth = max_depth
        self.max_steps = max_steps
        self.steps = 0
        self.budget_hit = False
        self.depth_hit = False
        self.step_hit = False
        self.metas = MetaSource()

    def spent(self) -> bool:
        self.steps += 1
        if self.steps > self.max_steps:
            self.step_hit = True
            return True
        return False


@dataclass
class Outcome:
    status: str  # won | lost | resource-limit
    code: str | None = None
    bindings: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    # what the winning play left behind; None unless status is won
    final_store: dict | None = None


# ------------------------------------------------------------------ rendering


def _safe_norm(t: Term, s: Subst) -> Term:
    try:
        return normalize(t, s)
    except ReductionLimitError:
        return substitute(t, s)


def _pt(t: Term, s: Subst) -> str:
    return print_term(_safe_norm(t, s))


def resolve_formula(f: Formula, s: Subst) -> Formula:
    if isinstance(f, Atom):
        return Atom(_safe_norm(f.term, s))
    kids = children(f)
    if not kids:
        return f
    return with_children(f, tuple(resolve_formula(k, s) for k in kids))


def _pf(f: Formula, s: Subst) -> str:
    return print_formula(resolve_formula(f, s))


def _render_event(ev: tuple, s: Subst) -> dict:
    kind = ev[0]
    if kind == "match_store":
        _, goal, matched, linear = ev
        return {"move": kind, "goal": _pt(goal, s), "matched": _pt(matched, s), "linear": linear}
    if kind == "builtin_check":
        _, atom, truth = ev
        return {"move": kind, "atom": _pt(atom, s), "truth": truth}
    if kind == "emit_output":
        _, atom = ev
        return {"move": kind, "atom": _pt(atom, s)}
    if kind == "backchain":
        _, rule, goal, mapping = ev
        unifier = {name: _pt(m, s) for name, m in mapping.items()}
        return {"move": kind, "rule": rule, "goal": _pt(goal, s), "unifier": unifier}
    if kind == "forward_fire":
        _, rule, consumed, produced, mapping = ev
        return {
            "move": kind,
            "rule": rule,
            "consumed": [_pt(c, s) for c in consumed],
            "produced": [_pt(p, s) for p in produced],
            "unifier": {name: _pt(m, s) for name, m in mapping.items()},
        }
    if kind in ("choose_left", "choose_right"):
        _, goal = ev
        return {"move": kind, "goal": _pf(goal, s)}
    if kind == "instantiate":
        _, var, meta = ev
        return {"move": kind, "var": var, "value": _pt(meta, s)}
    if kind == "unfold_agent":
        _, name = ev
        return {"move": kind, "agent": name}
    raise ValueError(f"unknown event {kind}")


def _render_store(ps: PS) -> dict:
    return {
        "linear": [_pt(a, ps.subst) for a in ps.store.linear],
        "reusable": [_pt(a, ps.subst) for a in ps.store.reusable],
        "rules": [r.source for r in ps.store.rules],
    }


def _snapshot(ps: PS, goal: str) -> dict:
    return {"store": _render_store(ps), "goal": goal}


# ------------------------------------------------------------------- builtins


def _builtin_shape(t: Term) -> bool:
    head, args = spine(t)
    if not isinstance(head, Sym):
        return False
    return (head.name == ">=" and len(args) == 2) or (head.name == "atom_obj" and len(args) == 1)


def _builtin_truth(t: Term) -> bool | None:
    """Truth of a builtin atom, or None when it cannot be decided yet."""
    head, args = spine(t)
    if head == Sym(">="):
        a, b = args
        if isinstance(a, Int) and isinstance(b, Int):
            return a.value >= b.value
        return None
    arg_head, _ = spine(args[0])
    if isinstance(arg_head, Sym):
        return arg_head.name not in _OBJECT_CONNECTIVES
    if isinstance(arg_head, Int):
        return True
    if isinstance(arg_head, Lam):
        return False
    return None  # flex head


# ----------------------------------------------------------------- env choice


def _ask(run: _Run, ps: PS, *, site: int, kind: str, prompt: str, goal: str,
         options: list[str] | None = None, var: str | None = None):
    """Consume the next committed env answer, or pause for a new one.

    Returns (answer, ps) when a committed answer matches this site, None
    when the committed answer belongs elsewhere (the branch dies), and
    raises NeedEnv when no answer is left.
    """
    if ps.used < len(run.answers):
        answer = run.answers[ps.used]
        if answer.site != site:
            return None
        return answer, ps._replace(used=ps.used + 1)
    raise NeedEnv(site=site, kind=kind, prompt=prompt,
                  snapshot=_snapshot(ps, goal), options=options, var=var)


# -------------------------------------------------------------------- loading


def _conj_atoms(f: Formula, binders: list[str]) -> list[Term]:
    if isinstance(f, Atom):
        return [f.term]
    if isinstance(f, PAnd):
        return _conj_atoms(f.left, binders) + _conj_atoms(f.right, binders)
    if isinstance(f, CUni):
        binders.append(f.var)
        return _conj_atoms(f.body, binders)
    raise LoadError("a rule consequent must be a parallel conjunction of atoms")


def _head_name(t: Term) -> str | None:
    h = t
    while isinstance(h, App):
        h = h.fn
    return h.name if isinstance(h, Sym) else None


def _all_builtin(f: Formula) -> bool:
    if isinstance(f, Atom):
        return _builtin_shape(f.term)
    return _all_builtin(f.left) and _all_builtin(f.right)


def _rules_of(f: Formula, binders: tuple[str, ...]) -> list[Rule]:
    if isinstance(f, CUni):
        return _rules_of(f.body, binders + (f.var,))
    if isinstance(f, Bang):
        return _rules_of(f.body, binders)
    if isinstance(f, CAnd):
        return _rules_of(f.left, binders) + _rules_of(f.right, binders)
    if isinstance(f, Imp):
        extra: list[str] = []
        cons = tuple(_conj_atoms(f.right, extra))
        src = f
        for b in reversed(binders):
            src = CUni(b, src)
        shaped = _fire_shape_ok(f.left)
        return [Rule(binders + tuple(extra), f.left, cons, print_formula(src),
                     cons_heads=tuple(_head_name(c) for c in cons),
                     fireable=shaped,
                     store_free=shaped and _all_builtin(f.left))]
    if isinstance(f, Atom):
        src = f
        for b in reversed(binders):
            src = CUni(b, src)
        return [Rule(binders, None, (f.term,), print_formula(src),
                     cons_heads=(_head_name(f.term),))]
    raise LoadError("unsupported shape under a resource binder")


def _load(f: Formula, ps: PS, run: _Run, reusable: bool) -> Iterator[PS]:
    """Add a resource-side formula to the store.

    Env-owned choices (COr, CExi) are resolved as they are met; a linear
    CAnd is a machine choice and branches the search.
    """
    if isinstance(f, Atom):
        t = normalize(f.term, ps.subst)
        if reusable:
            yield ps._replace(store=ps.store.add_reusable(t))
        else:
            yield ps._replace(store=ps.store.add_linear([t]))
        return
    if isinstance(f, Bang):
        yield from _load(f.body, ps, run, True)
        return
    if isinstance(f, AgentRef):
        yield from _load(run.program.agents[f.name], ps, run, reusable)
        return
    if isinstance(f, (CUni, Imp)):
        rules = _rules_of(f, ())
        yield ps._replace(store=ps.store.add_rules(rules))
        return
    if isinstance(f, PAnd):
        for mid in _load(f.left, ps, run, reusable):
            yield from _load(f.right, mid, run, reusable)
        return
    if isinstance(f, CAnd):
        if reusable:
            for mid in _load(f.left, ps, run, True):
                yield from _load(f.right, mid, run, True)
        else:
            yield from _load(f.left, ps, run, False)
            yield from _load(f.right, ps, run, False)
        return
    if isinstance(f, COr):
        got = _ask(run, ps, site=f.nid, kind="branch",
                   prompt=f.prompt or "choose a side",
                   goal=_pf(f, ps.subst),
                   options=[_pf(f.left, ps.subst), _pf(f.right, ps.subst)])
        if got is None:
            return
        answer, ps2 = got
        side = f.left if answer.branch == "left" else f.right
        yield from _load(side, ps2, run, reusable)
        return
    if isinstance(f, CExi):
        domain = run.program.domains.get(f.var)
        got = _ask(run, ps, site=f.nid, kind="value",
                   prompt=f.prompt or f"choose a value for {f.var}",
                   goal=_pf(f, ps.subst),
                   options=None if domain is None else [print_term(v) for v in domain],
                   var=f.var)
        if got is None:
            return
        answer, ps2 = got
        yield from _load(subst_formula(f.body, {f.var: answer.value}), ps2, run, reusable)
        return
    raise LoadError(f"cannot store a {type(f).__name__} resource")


# -------------------------------------------------------------------- playing


def _play(goal: Formula, ps: PS, run: _Run, depth: int) -> Iterator[PS]:
    if depth > run.max_depth:
        run.depth_hit = True
        return
    if isinstance(goal, Atom):
        yield from _solve_atom(goal.term, ps, run, depth)
        return
    if isinstance(goal, AgentRef):
        body = run.program.agents[goal.name]
        yield from _play(body, ps.ev("unfold_agent", goal.name), run, depth + 1)
        return
    if isinstance(goal, PAnd):
        for mid in _play(goal.left, ps, run, depth + 1):
            yield from _play(goal.right, mid, run, depth + 1)
        return
    if isinstance(goal, (POr, COr)):
        yield from _play(goal.left, ps.ev("choose_left", goal), run, depth + 1)
        yield from _play(goal.right, ps.ev("choose_right", goal), run, depth + 1)
        return
    if isinstance(goal, CAnd):
        got = _ask(run, ps, site=goal.nid, kind="branch",
                   prompt=goal.prompt or "choose a side",
                   goal=_pf(goal, ps.subst),
                   options=[_pf(goal.left, ps.subst), _pf(goal.right, ps.subst)])
        if got is None:
            return
        answer, ps2 = got
        side = goal.left if answer.branch == "left" else goal.right
        yield from _play(side, ps2, run, depth + 1)
        return
    if isinstance(goal, CUni):
        domain = run.program.domains.get(goal.var)
        got = _ask(run, ps, site=goal.nid, kind="value",
                   prompt=goal.prompt or f"choose a value for {goal.var}",
                   goal=_pf(goal, ps.subst),
                   options=None if domain is None else [print_term(v) for v in domain],
                   var=goal.var)
        if got is None:
            return
        answer, ps2 = got
        yield from _play(subst_formula(goal.body, {goal.var: answer.value}), ps2, run, depth + 1)
        return
    if isinstance(goal, CExi):
        m = run.metas.fresh(goal.var)
        body = subst_formula(goal.body, {goal.var: m})
        yield from _play(body, ps.ev("instantiate", goal.var, m), run, depth + 1)
        return
    if isinstance(goal, Bang):
        yield from _play(goal.body, ps, run, depth + 1)
        return
    if isinstance(goal, Imp):
        ante = goal.left
        if isinstance(ante, Atom):
            t = normalize(ante.term, ps.subst)
            if _builtin_shape(t):
                truth = _builtin_truth(t)
                if truth is None:
                    return
                ps2 = ps.ev("builtin_check", t, truth)
                if truth:
                    yield from _play(goal.right, ps2, run, depth + 1)
                else:
                    yield ps2
                return
        for mid in _load(ante, ps, run, False):
            yield from _play(goal.right, mid, run, depth + 1)
        return
    raise TypeError(f"not a playable formula: {goal!r}")


def _fire_shape_ok(f: Formula) -> bool:
    if isinstance(f, Atom):
        return True
    if isinstance(f, PAnd):
        return _fire_shape_ok(f.left) and _fire_shape_ok(f.right)
    return False


def _match_ante(f: Formula, ps: PS, consumed: tuple[Term, ...]) -> Iterator[tuple[PS, tuple[Term, ...]]]:
    if isinstance(f, PAnd):
        for mid, c1 in _match_ante(f.left, ps, consumed):
            yield from _match_ante(f.right, mid, c1)
        return
    assert isinstance(f, Atom)
    t = normalize(f.term, ps.subst)
    if _builtin_shape(t):
        if _builtin_truth(t) is True:
            yield ps, consumed
        return
    for idx, a in enumerate(ps.store.linear):
        try:
            s2 = unify(t, a, ps.subst)
        except UnifyError:
            continue
        yield ps._replace(subst=s2, store=ps.store.without_linear(idx)), consumed + (a,)
    for a in ps.store.reusable:
        try:
            s2 = unify(t, a, ps.subst)
        except UnifyError:
            continue
        yield ps._replace(subst=s2), consumed


def _side_products(ps: PS, rest: list[Term]) -> Iterator[PS]:
    out = []
    for r in rest:
        rn = normalize(r, ps.subst)
        if not is_ground(rn):
            return
        out.append(rn)
    yield ps._replace(store=ps.store.add_linear(out))


def _solve_atom(term0: Term, ps: PS, run: _Run, depth: int) -> Iterator[PS]:
    if depth > run.max_depth:
        run.depth_hit = True
        return
    if run.spent():
        return
    t = normalize(term0, ps.subst)

    if _builtin_shape(t):
        if _builtin_truth(t) is True:
            yield ps.ev("builtin_check", t, True)
        return

    head, args = spine(t)
    if isinstance(head, Sym) and (head.name, len(args)) in run.program.outputs:
        if is_ground(t):
            yield ps.ev("emit_output", t)._replace(outputs=ps.outputs + (t,))

    for idx, a in enumerate(ps.store.linear):
        try:
            s2 = unify(t, a, ps.subst)
        except UnifyError:
            continue
        yield ps.ev("match_store", t, a, True)._replace(subst=s2, store=ps.store.without_linear(idx))
    for a in ps.store.reusable:
        try:
            s2 = unify(t, a, ps.subst)
        except UnifyError:
            continue
        yield ps.ev("match_store", t, a, False)._replace(subst=s2)

    gname = _head_name(t) if not isinstance(head, Meta) else None
    for ri, rule in enumerate(ps.store.rules):
        if gname is not None:
            plausible = [ci for ci, h in enumerate(rule.cons_heads)
                         if h is None or h == gname]
            if not plausible:
                continue
        else:
            plausible = range(len(rule.consequents))
        mapping = {b: run.metas.fresh(b) for b in rule.binders}
        cons = [subst_fvars(c, mapping) for c in rule.consequents]
        for ci in plausible:
            try:
                s2 = unify(t, cons[ci], ps.subst)
            except UnifyError:
                continue
            ps2 = ps.ev("backchain", ri, t, mapping)._replace(subst=s2)
            rest = cons[:ci] + cons[ci + 1:]
            if rule.antecedent is None:
                yield from _side_products(ps2, rest)
            else:
                ante = subst_formula(rule.antecedent, mapping)
                for ps3 in _play(ante, ps2, run, depth + 1):
                    yield from _side_products(ps3, rest)

    store_empty = not ps.store.linear and not ps.store.reusable
    fireable = [(ri, rule) for ri, rule in enumerate(ps.store.rules)
                if rule.fireable and (rule.store_free or not store_empty)]
    if not fireable:
        return
    if ps.fires >= run.k:
        run.budget_hit = True
        return
    for ri, rule in fireable:
        mapping = {b: run.metas.fresh(b) for b in rule.binders}
        ante = subst_formula(rule.antecedent, mapping)
        cons = [subst_fvars(c, mapping) for c in rule.consequents]
        for mid, consumed in _match_ante(ante, ps, ()):
            produced = []
            ok = True
            for c in cons:
                cn = normalize(c, mid.subst)
                if not is_ground(cn):
                    ok = False
                    break
                produced.append(cn)
            if not ok:
                continue
            ps2 = mid.ev("forward_fire", ri, consumed, tuple(produced), mapping)
            ps2 = ps2._replace(store=ps2.store.add_linear(produced), fires=ps2.fires + 1)
            yield from _solve_atom(term0, ps2, run, depth + 1)


# ------------------------------------------------------------------- sessions


def _referenced_agents(f: Formula) -> set[str]:
    out: set[str] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, AgentRef):
            out.add(g.name)
        else:
            stack.extend(children(g))
    return out


class Session:
    """One interactive play of `query` against `program`.

    A declared agent the query never names is loaded as a resource
    before play starts; naming it is how a query decides where an agent
    participates (left of -> as resources, bare position as the goal).
    """

    def __init__(self, program: Program, query: Formula, *,
                 max_fires: int | None = None, max_depth: int | None = None,
                 max_steps: int | None = None):
        mentioned = _referenced_agents(query)
        for name in reversed(program.agents):
            if name not in mentioned:
                query = Imp(AgentRef(name), query)
        self.program = program
        self.query = query
        self.max_fires = DEFAULT_MAX_FIRES if max_fires is None else max_fires
        self.max_depth = DEFAULT_MAX_DEPTH if max_depth is None else max_depth
        self.max_steps = DEFAULT_MAX_STEPS if max_steps is None else max_steps
        self.records: list[dict] = []
        self.answers: list[Answer] = []
        self.pending: dict | None = None
        self._pending_req: NeedEnv | None = None
        self.outcome: Outcome | None = None
        self._started = False
        # deep searches chain generator frames; give them headroom
        if sys.getrecursionlimit() < 8000:
            sys.setrecursionlimit(8000)

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        self._search()

    def _search(self) -> None:
        try:
            for k in range(self.max_fires + 1):
                run = _Run(self.program, self.answers, k, self.max_depth, self.max_steps)
                try:
                    won = next(_play(self.query, _PS0, run, 0), None)
                except NeedEnv as req:
                    self._pause(req)
                    return
                if won is not None:
                    self._finish_won(won)
                    return
                if run.step_hit:
                    self._finish("resource-limit", code="steps")
                    return
                if run.budget_hit:
                    continue
                if run.depth_hit:
                    self._finish("resource-limit", code="depth")
                    return
                self._finish("lost")
                return
            self._finish("resource-limit", code="fires")
        except ReductionLimitError:
            self._finish("resource-limit", code="reduction-limit")

    def _pause(self, req: NeedEnv) -> None:
        record = {
            "type": "env_request",
            "choice_id": len(self.answers) + 1,
            "kind": req.kind,
            "prompt": req.prompt,
        }
        if req.options is not None:
            record["options"] = req.options
        if req.var is not None:
            record["var"] = req.var
        record["snapshot"] = req.snapshot
        self.records.append(record)
        self.pending = record
        self._pending_req = req

    def _finish_won(self, ps: PS) -> None:
        bindings: dict[str, str] = {}
        for ev in ps.events:
            self.records.append({"type": "event", "event": _render_event(ev, ps.subst)})
            if ev[0] == "instantiate" and ev[1] not in bindings:
                bindings[ev[1]] = _pt(ev[2], ps.subst)
        outputs = [_pt(o, ps.subst) for o in ps.outputs]
        self.outcome = Outcome("won", None, bindings, outputs, _render_store(ps))
        self.records.append({"type": "result", "status": "won",
                             "bindings": bindings, "outputs": outputs})

    def _finish(self, status: str, code: str | None = None) -> None:
        self.outcome = Outcome(status, code)
        record = {"type": "result", "status": status, "bindings": {}, "outputs": []}
        if code is not None:
            record["code"] = code
        self.records.append(record)

    @property
    def domain_of_pending(self) -> tuple[Term, ...] | None:
        req = self._pending_req
        if req is None or req.var is None:
            return None
        return self.program.domains.get(req.var)

    def apply_env_move(self, pick: str, choice_id: int | None = None) -> None:
        if self.pending is None or self._pending_req is None:
            raise MoveError("there is no pending request", "no-pending-request")
        if choice_id is not None and choice_id != self.pending["choice_id"]:
            raise MoveError(
                f"move is for request {choice_id}, current is {self.pending['choice_id']}",
                "stale-choice")
        req = self._pending_req
        pick = pick.strip()
        if req.kind == "branch":
            if pick not in ("left", "right"):
                raise MoveError(f"expected 'left' or 'right', got {pick!r}", "invalid-move")
            answer = Answer(req.site, branch=pick)
            canonical = pick
        else:
            raw = pick
            if "=" in raw:
                name, rest = raw.split("=", 1)
                if name.strip() == req.var:
                    raw = rest.strip()
            try:
                value = parse_term(raw)
            except ParseError as exc:
                raise MoveError(f"not a term: {exc}", "invalid-move") from None
            if not is_ground(value):
                raise MoveError(f"{raw!r} is not ground", "invalid-move")
            value = normalize(value)
            domain = self.program.domains.get(req.var) if req.var else None
            if domain is not None and value not in domain:
                raise MoveError(f"{print_term(value)} is not in the domain of {req.var}",
                                "out-of-domain")
            answer = Answer(req.site, value=value)
            canonical = print_term(value)
        self.records.append({"type": "env_move",
                             "choice_id": self.pending["choice_id"],
                             "pick": canonical})
        self.answers.append(answer)
        self.pending = None
        self._pending_req = None
        self._search()


# ---------------------------------------------------------------- whole-game


def verify_winnable(program: Program, query: Formula, *,
                    domains: dict[str, tuple[Term, ...]] | None = None,
                    max_fires: int | None = None, max_plays: int = 10000) -> tuple[bool, int]:
    """Check the machine wins under every environment line of play.

    Returns (winnable, number of complete plays).  Value choices must
    range over a domain, declared in the program or passed in `domains`.
    """
    lookup = dict(program.domains)
    if domains:
        lookup.update(domains)
    plays = 0
    all_won = True
    stack: list[tuple[str, ...]] = [()]
    while stack:
        picks = stack.pop()
        s = Session(program, query, max_fires=max_fires)
        s.start()
        for p in picks:
            s.apply_env_move(p)
        if s.pending is not None:
            req = s._pending_req
            if req.kind == "branch":
                stack.append(picks + ("right",))
                stack.append(picks + ("left",))
            else:
                domain = lookup.get(req.var) if req.var else None
                if domain is None:
                    raise VerifyError(
                        f"cannot enumerate values for {req.var or 'a choice'}; "
                        "declare a domain", "infinite-env-domain")
                for v in reversed(domain):
                    stack.append(picks + (print_term(v),))
        else:
            plays += 1
            if s.outcome.status != "won":
                all_won = False
        if plays > max_plays or len(stack) > max_plays:
            raise VerifyError("too many environment plays", "env-space")
    return all_won, plays


def dump_records(records: list[dict]) -> str:
    """Records as the wire format: one compact object per line."""
    return "".join(
        json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in records)


def load_records(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def replay(program: Program, query: Formula, records: list[dict], *,
           max_fires: int | None = None) -> None:
    """Re-run a committed record stream; raise on the first mismatch."""
    picks = [r["pick"] for r in records if r.get("type") == "env_move"]
    s = Session(program, query, max_fires=max_fires)
    s.start()
    for p in picks:
        if s.pending is None:
            raise ReplayDivergence("trace has an env move the play does not ask for")
        try:
            s.apply_env_move(p)
        except MoveError as exc:
            raise ReplayDivergence(f"recorded move rejected: {exc}") from None
    if len(s.records) != len(records):
        raise ReplayDivergence(
            f"trace has {len(records)} records, replay produced {len(s.records)}")
    for i, (a, b) in enumerate(zip(records, s.records)):
        if json.dumps(a, sort_keys=True) != json.dumps(b, sort_keys=True):
            raise ReplayDivergence(f"record {i} differs on replay")

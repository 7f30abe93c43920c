"""Reader and printer for agents, queries and terms.

Connectives from loosest to tightest: `->` (right associative), `|`, `&`,
`\\/`, `/\\`, then the prefixes `!`, `@X.`, `#X.`, then `>=`, additive and
multiplicative arithmetic, then application `f(a, b)`.  `%` starts a line
comment.  A string literal may follow `&`, `|` or a binder name to attach
a prompt shown when the environment must move at that spot.

Identifiers starting with an uppercase letter are formula variables.  Any
left free after parsing are wrapped in CUni binders around their clause:
the outermost implication enclosing every occurrence, or the atom itself
when no implication does.  The same name occurring in sibling clauses
gets an independent binder per clause.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .formulas import (
    Atom,
    AgentRef,
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
    with_children,
)
from .terms import App, FVar, Int, Lam, Meta, Sym, Term, Var, app, is_ground, spine

BUILTIN_NAMES = frozenset({"atom_obj"})

_KEYWORDS = ("agent", "output", "domain")


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True, slots=True)
class Program:
    agents: dict[str, Formula] = field(default_factory=dict)
    outputs: frozenset[tuple[str, int]] = frozenset()
    domains: dict[str, tuple[Term, ...]] = field(default_factory=dict)


# -------------------------------------------------------------------- lexing

_PUNCT = ("?-", "->", "/\\", "\\/", ">=",
          "@", "#", "!", "\\", ".", ",", "(", ")", "=", "/", "+", "-", "*", "&", "|")


@dataclass(frozen=True, slots=True)
class _Tok:
    kind: str  # ident | int | string | punct | eof
    text: str
    line: int
    col: int


def _lex(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buf = []
            while True:
                if i >= n or text[i] == "\n":
                    raise ParseError("unterminated string", start_line, start_col)
                ch = text[i]
                if ch == '"':
                    i += 1
                    col += 1
                    break
                if ch == "\\" and i + 1 < n and text[i + 1] in ('"', "\\"):
                    buf.append(text[i + 1])
                    i += 2
                    col += 2
                    continue
                buf.append(ch)
                i += 1
                col += 1
            toks.append(_Tok("string", "".join(buf), start_line, start_col))
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Tok("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(_Tok("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(_Tok("eof", "", line, col))
    return toks


# ------------------------------------------------------------------- parsing


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0
        self.lams: list[str] = []

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def fail(self, message: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def eat(self, text: str) -> bool:
        if self.at("punct", text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if not self.at("punct", text):
            self.fail(f"expected {text!r}")
        return self.next()

    def ident(self, what: str = "name") -> _Tok:
        if not self.at("ident"):
            self.fail(f"expected {what}")
        return self.next()

    def opt_prompt(self) -> str | None:
        if self.at("string"):
            return self.next().text
        return None

    # formulas, loosest binding first

    def formula(self) -> Formula:
        left = self.cor()
        if self.eat("->"):
            return Imp(left, self.formula())
        return left

    def cor(self) -> Formula:
        left = self.cand()
        while self.eat("|"):
            prompt = self.opt_prompt()
            left = COr(left, self.cand(), prompt)
        return left

    def cand(self) -> Formula:
        left = self.por()
        while self.eat("&"):
            prompt = self.opt_prompt()
            left = CAnd(left, self.por(), prompt)
        return left

    def por(self) -> Formula:
        left = self.pand()
        while self.eat("\\/"):
            left = POr(left, self.pand())
        return left

    def pand(self) -> Formula:
        left = self.prefix()
        while self.eat("/\\"):
            left = PAnd(left, self.prefix())
        return left

    def prefix(self) -> Formula:
        if self.eat("!"):
            return Bang(self.prefix())
        if self.at("punct", "@") or self.at("punct", "#"):
            op = self.next()
            name = self.ident("binder name")
            if not name.text[0].isupper():
                self.fail("binder name must start with an uppercase letter", name)
            prompt = self.opt_prompt()
            self.expect(".")
            body = self.prefix()
            cls = CUni if op.text == "@" else CExi
            return cls(name.text, body, prompt)
        return self.atomlevel()

    def atomlevel(self) -> Formula:
        kind, value = self.additive(True)
        if self.at("punct", ">="):
            op = self.next()
            left = self.as_term(kind, value, op)
            rk, rv = self.additive(False)
            return Atom(app(Sym(">="), left, rv))
        if kind == "formula":
            return value
        return Atom(value)

    # expressions; each level returns ("term", t) or ("formula", f), where
    # a formula can only bubble up untouched out of parentheses

    def as_term(self, kind, value, op: _Tok) -> Term:
        if kind == "formula":
            self.fail(f"{op.text!r} cannot apply to a compound formula", op)
        return value

    def additive(self, allow_formula: bool):
        kind, value = self.multiplicative(allow_formula)
        while self.at("punct", "+") or self.at("punct", "-"):
            op = self.next()
            left = self.as_term(kind, value, op)
            rk, rv = self.multiplicative(False)
            kind, value = "term", app(Sym(op.text), left, rv)
        return kind, value

    def multiplicative(self, allow_formula: bool):
        kind, value = self.application(allow_formula)
        while self.at("punct", "*"):
            op = self.next()
            left = self.as_term(kind, value, op)
            rk, rv = self.application(False)
            kind, value = "term", app(Sym("*"), left, rv)
        return kind, value

    def application(self, allow_formula: bool):
        kind, value = self.primary(allow_formula)
        while self.at("punct", "("):
            op = self.next()
            head = self.as_term(kind, value, op)
            args = [self.term()]
            while self.eat(","):
                args.append(self.term())
            self.expect(")")
            kind, value = "term", app(head, *args)
        return kind, value

    def primary(self, allow_formula: bool):
        tok = self.peek()
        if tok.kind == "punct" and tok.text == "(":
            self.next()
            if allow_formula:
                f = self.formula()
                self.expect(")")
                if isinstance(f, Atom):
                    return "term", f.term
                return "formula", f
            t = self.term()
            self.expect(")")
            return "term", t
        if tok.kind == "punct" and tok.text == "\\":
            return "term", self.lam()
        if tok.kind == "punct" and tok.text == "-" and self.peek(1).kind == "int":
            self.next()
            return "term", Int(-int(self.next().text))
        if tok.kind == "int":
            self.next()
            return "term", Int(int(tok.text))
        if tok.kind == "ident":
            self.next()
            name = tok.text
            for depth, binder in enumerate(reversed(self.lams)):
                if binder == name:
                    return "term", Var(depth)
            if name[0].isupper():
                return "term", FVar(name)
            return "term", Sym(name)
        if tok.kind == "string":
            self.fail("a prompt string is only allowed after '&', '|' or a binder")
        self.fail("expected a term")

    def lam(self) -> Term:
        self.expect("\\")
        name = self.ident("binder name")
        self.expect(".")
        self.lams.append(name.text)
        try:
            body = self.term()
        finally:
            self.lams.pop()
        return Lam(body, name.text)

    def term(self) -> Term:
        if self.at("punct", "\\"):
            return self.lam()
        kind, value = self.additive(False)
        if self.at("punct", ">="):
            op = self.next()
            left = self.as_term(kind, value, op)
            _, rv = self.additive(False)
            return app(Sym(">="), left, rv)
        return value

    # declarations

    def program(self) -> Program:
        agents: dict[str, Formula] = {}
        outputs: set[tuple[str, int]] = set()
        domains: dict[str, tuple[Term, ...]] = {}
        while not self.at("eof"):
            if not self.at("ident"):
                self.fail("expected 'agent', 'output' or 'domain'")
            head = self.next()
            if head.text == "agent":
                name = self.ident("agent name")
                self.check_definable(name)
                if name.text in agents:
                    self.fail(f"duplicate agent {name.text!r}", name)
                self.expect("=")
                body = self.formula()
                self.expect(".")
                agents[name.text] = body
            elif head.text == "output":
                name = self.ident("output name")
                self.check_definable(name)
                self.expect("/")
                if not self.at("int"):
                    self.fail("expected an arity")
                arity = int(self.next().text)
                self.expect(".")
                outputs.add((name.text, arity))
            elif head.text == "domain":
                name = self.ident("domain variable")
                if not name.text[0].isupper():
                    self.fail("domain variable must start with an uppercase letter", name)
                self.expect("=")
                values = [self.term()]
                while self.eat(","):
                    values.append(self.term())
                self.expect(".")
                for v in values:
                    if not is_ground(v):
                        self.fail(f"domain value for {name.text} is not ground", name)
                domains[name.text] = tuple(values)
            else:
                self.fail("expected 'agent', 'output' or 'domain'", head)
        names = set(agents)
        agents = {n: _resolve(_desugar(f), names) for n, f in agents.items()}
        return Program(agents, frozenset(outputs), domains)

    def check_definable(self, name: _Tok) -> None:
        if name.text in BUILTIN_NAMES:
            self.fail(f"{name.text!r} is built in and cannot be redefined", name)

    def query(self, agent_names: set[str]) -> Formula:
        self.expect("?-")
        f = self.formula()
        self.expect(".")
        if not self.at("eof"):
            self.fail("trailing input after query")
        return _resolve(_desugar(f), agent_names)


def parse_program(text: str) -> Program:
    return _Parser(text).program()


def parse_query(text: str, agents=()) -> Formula:
    if isinstance(agents, Program):
        names = set(agents.agents)
    else:
        names = set(agents)
    return _Parser(text).query(names)


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    if not p.at("eof"):
        p.fail("trailing input after term")
    return t


# ------------------------------------------------------ free-variable binding


def _term_uppers(t: Term) -> list[str]:
    """Formula-variable names in preorder, deduplicated."""
    out: list[str] = []

    def walk(x: Term) -> None:
        if isinstance(x, FVar):
            if x.name not in out:
                out.append(x.name)
        elif isinstance(x, Lam):
            walk(x.body)
        elif isinstance(x, App):
            walk(x.fn)
            walk(x.arg)

    walk(t)
    return out


def _common_prefix(paths: list[tuple[int, ...]]) -> tuple[int, ...]:
    out = []
    for parts in zip(*paths):
        if len(set(parts)) > 1:
            break
        out.append(parts[0])
    return tuple(out)


def _comparable(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    k = min(len(a), len(b))
    return a[:k] == b[:k]


def _desugar(f: Formula) -> Formula:
    records: list[tuple[str, tuple[int, ...], tuple[type, ...]]] = []

    def collect(g: Formula, path: tuple[int, ...], kinds: tuple[type, ...], bound: frozenset[str]) -> None:
        kinds = kinds + (type(g),)
        if isinstance(g, Atom):
            for name in _term_uppers(g.term):
                if name not in bound:
                    records.append((name, path, kinds))
        elif isinstance(g, (CUni, CExi)):
            collect(g.body, path + (0,), kinds, bound | {g.var})
        else:
            for idx, kid in enumerate(children(g)):
                collect(kid, path + (idx,), kinds, bound)

    collect(f, (), (), frozenset())
    if not records:
        return f

    # Each occurrence's clause is the outermost... rather, the deepest
    # implication above it, or the atom itself.  Occurrences of one name
    # whose clauses nest share a binder at the outermost of them.
    per_name: dict[str, list[tuple[int, tuple[int, ...]]]] = {}
    for seq, (name, path, kinds) in enumerate(records):
        imp_at = None
        for j, kd in enumerate(kinds):
            if kd is Imp:
                imp_at = j
        clause = path[:imp_at] if imp_at is not None else path
        per_name.setdefault(name, []).append((seq, clause))

    groups: dict[tuple[int, ...], list[tuple[int, str]]] = {}
    for name, occ in per_name.items():
        parent = list(range(len(occ)))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a in range(len(occ)):
            for b in range(a + 1, len(occ)):
                if _comparable(occ[a][1], occ[b][1]):
                    parent[find(a)] = find(b)
        comps: dict[int, list[int]] = {}
        for idx in range(len(occ)):
            comps.setdefault(find(idx), []).append(idx)
        for members in comps.values():
            bind = _common_prefix([occ[m][1] for m in members])
            first = min(occ[m][0] for m in members)
            groups.setdefault(bind, []).append((first, name))

    def wrap(g: Formula, path: tuple[int, ...], names: list[str]) -> Formula:
        if not path:
            for n in reversed(names):
                g = CUni(n, g)
            return g
        kids = list(children(g))
        kids[path[0]] = wrap(kids[path[0]], path[1:], names)
        return with_children(g, tuple(kids))

    for path in sorted(groups, key=len, reverse=True):
        names = [n for _, n in sorted(groups[path])]
        f = wrap(f, path, names)
    return f


def _resolve(f: Formula, names: set[str]) -> Formula:
    if isinstance(f, Atom):
        if isinstance(f.term, Sym) and f.term.name in names:
            return AgentRef(f.term.name)
        return f
    kids = children(f)
    if not kids:
        return f
    return with_children(f, tuple(_resolve(k, names) for k in kids))


# ------------------------------------------------------------------ printing

_ARITH_PREC = {"+": 2, "-": 2, "*": 3}


def _term_names(t: Term) -> set[str]:
    out: set[str] = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, (Sym, FVar)):
            out.add(x.name)
        elif isinstance(x, Lam):
            stack.append(x.body)
        elif isinstance(x, App):
            stack.append(x.fn)
            stack.append(x.arg)
    return out


def _fresh(hint: str, avoid: set[str]) -> str:
    if hint and hint not in avoid:
        return hint
    base = hint or "x"
    n = 1
    while f"{base}{n}" in avoid:
        n += 1
    return f"{base}{n}"


def _pt(t: Term, ctx: int, env: list[str], avoid: set[str]) -> str:
    if isinstance(t, Var):
        if t.index < len(env):
            return env[len(env) - 1 - t.index]
        return f"_v{t.index - len(env)}"
    if isinstance(t, FVar) or isinstance(t, Sym):
        return t.name
    if isinstance(t, Int):
        return str(t.value)
    if isinstance(t, Meta):
        return f"?{t.hint or 'v'}{t.ident}"
    if isinstance(t, Lam):
        name = _fresh(t.hint, avoid | set(env))
        body = _pt(t.body, 0, env + [name], avoid)
        s = f"\\{name}.{body}"
        return f"({s})" if ctx > 0 else s
    head, args = spine(t)
    if isinstance(head, Sym) and len(args) == 2:
        if head.name in _ARITH_PREC:
            prec = _ARITH_PREC[head.name]
            left = _pt(args[0], prec, env, avoid)
            right = _pt(args[1], prec + 1, env, avoid)
            s = f"{left}{head.name}{right}"
            return f"({s})" if ctx > prec else s
        if head.name == ">=":
            left = _pt(args[0], 2, env, avoid)
            right = _pt(args[1], 2, env, avoid)
            s = f"{left} >= {right}"
            return f"({s})" if ctx > 1 else s
    if args:
        fn = _pt(head, 4, env, avoid)
        inner = ", ".join(_pt(a, 0, env, avoid) for a in args)
        return f"{fn}({inner})"
    return _pt(head, ctx, env, avoid)


def print_term(t: Term) -> str:
    return _pt(t, 0, [], _term_names(t))


def _pf(f: Formula, ctx: int, avoid: set[str]) -> str:
    if isinstance(f, Atom):
        return _pt(f.term, 0, [], avoid)
    if isinstance(f, AgentRef):
        return f.name
    if isinstance(f, Imp):
        s = f"{_pf(f.left, 2, avoid)} -> {_pf(f.right, 1, avoid)}"
        return f"({s})" if ctx > 1 else s
    if isinstance(f, COr):
        s = f"{_pf(f.left, 2, avoid)} | {_pf(f.right, 3, avoid)}"
        return f"({s})" if ctx > 2 else s
    if isinstance(f, CAnd):
        s = f"{_pf(f.left, 3, avoid)} & {_pf(f.right, 4, avoid)}"
        return f"({s})" if ctx > 3 else s
    if isinstance(f, POr):
        s = f"{_pf(f.left, 4, avoid)} \\/ {_pf(f.right, 5, avoid)}"
        return f"({s})" if ctx > 4 else s
    if isinstance(f, PAnd):
        s = f"{_pf(f.left, 5, avoid)} /\\ {_pf(f.right, 6, avoid)}"
        return f"({s})" if ctx > 5 else s
    if isinstance(f, Bang):
        s = f"!{_pf(f.body, 6, avoid)}"
        return f"({s})" if ctx > 6 else s
    if isinstance(f, (CUni, CExi)):
        mark = "@" if isinstance(f, CUni) else "#"
        s = f"{mark}{f.var}.{_pf(f.body, 6, avoid)}"
        return f"({s})" if ctx > 6 else s
    raise TypeError(f"not a formula: {f!r}")


def _formula_names(f: Formula) -> set[str]:
    out: set[str] = set()

    def walk(g: Formula) -> None:
        if isinstance(g, Atom):
            out.update(_term_names(g.term))
        elif isinstance(g, AgentRef):
            out.add(g.name)
        elif isinstance(g, (CUni, CExi)):
            out.add(g.var)
            walk(g.body)
        else:
            for kid in children(g):
                walk(kid)

    walk(f)
    return out


def print_formula(f: Formula) -> str:
    return _pf(f, 0, _formula_names(f))

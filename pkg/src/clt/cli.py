"""Command line for the task-logic interpreter.

Four subcommands: `run` plays one query with environment moves scripted
in a file, `repl` lets a human play the environment interactively,
`verify` enumerates every environment line of play, and `serve` exposes
sessions over a socket for the browser playground.

Exit codes: 0 the machine won, 1 it lost, 2 a resource limit stopped
the search, 3 for usage, parse, and move-script errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .engine import MoveError, Outcome, Session, VerifyError, dump_records, verify_winnable
from .library import PROGRAM_NAMES, bundled_source
from .syntax import ParseError, Program, parse_program, parse_query, parse_term
from .terms import normalize

EX_WON, EX_LOST, EX_LIMIT, EX_USAGE = 0, 1, 2, 3

_STATUS_EXIT = {"won": EX_WON, "lost": EX_LOST, "resource-limit": EX_LIMIT}


class CliError(Exception):
    def __init__(self, message: str, code: int = EX_USAGE):
        super().__init__(message)
        self.code = code


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the contract reserves 2 for
    # resource limits, so route usage failures through CliError
    def error(self, message):
        raise CliError(message)


def env_max_fires() -> int | None:
    raw = os.environ.get("CLT_MAX_FIRES")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"CLT_MAX_FIRES is not an integer: {raw!r}") from None


def _fire_limit(args) -> int | None:
    if getattr(args, "max_fires", None) is not None:
        return args.max_fires
    return env_max_fires()


def program_source(arg: str) -> tuple[str, str]:
    """Resolve a program argument to (label, source text).

    An existing file path wins; otherwise the argument names a bundled
    program, with or without the .clt suffix.
    """
    path = Path(arg)
    if path.exists():
        try:
            return str(path), path.read_text("utf-8")
        except OSError as exc:
            raise CliError(f"cannot read {arg}: {exc}") from None
    name = arg[:-4] if arg.endswith(".clt") else arg
    if name in PROGRAM_NAMES:
        return name, bundled_source(name)
    raise CliError(f"{arg}: no such file or bundled program "
                   f"(bundled: {', '.join(PROGRAM_NAMES)})")


def load_program(arg: str) -> Program:
    label, text = program_source(arg)
    try:
        return parse_program(text)
    except ParseError as exc:
        raise CliError(f"{label}:{exc}") from None


def parse_query_arg(text: str, prog: Program):
    try:
        return parse_query(text, prog)
    except ParseError as exc:
        raise CliError(f"query:{exc}") from None


def read_moves(path: str) -> list[str]:
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from None
    moves = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("%"):
            moves.append(line)
    return moves


def outcome_lines(out: Outcome) -> list[str]:
    lines = [f"output {o}" for o in out.outputs]
    if out.status == "won":
        tail = "".join(f"  {k} = {v}" for k, v in out.bindings.items())
        lines.append("Won" + tail)
    elif out.status == "lost":
        lines.append("Lost")
    else:
        lines.append(f"Resource limit ({out.code})")
    return lines


def write_trace(path: str, session: Session) -> None:
    try:
        Path(path).write_text(dump_records(session.records), encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from None


# ------------------------------------------------------------------------ run


def cmd_run(args) -> int:
    prog = load_program(args.file)
    query = parse_query_arg(args.query, prog)
    session = Session(prog, query, max_fires=_fire_limit(args))
    session.start()
    for pick in read_moves(args.moves) if args.moves else []:
        if session.pending is None:
            raise CliError(f"surplus environment move: {pick!r}")
        try:
            session.apply_env_move(pick)
        except MoveError as exc:
            raise CliError(f"move {pick!r}: {exc}") from None
    if session.pending is not None:
        raise CliError(
            f"unanswered environment request: {session.pending['prompt']}")
    if args.trace:
        write_trace(args.trace, session)
    for line in outcome_lines(session.outcome):
        print(line)
    return _STATUS_EXIT[session.outcome.status]


# ----------------------------------------------------------------------- repl


def _format_event(ev: dict) -> str:
    move = ev["move"]
    if move == "match_store":
        kind = "linear" if ev["linear"] else "reusable"
        return f"match_store {ev['matched']} ({kind})"
    if move == "builtin_check":
        return f"builtin_check {ev['atom']} -> {str(ev['truth']).lower()}"
    if move == "emit_output":
        return f"emit_output {ev['atom']}"
    if move == "backchain":
        return f"backchain rule {ev['rule']} on {ev['goal']}"
    if move == "forward_fire":
        consumed = ", ".join(ev["consumed"]) or "nothing"
        produced = ", ".join(ev["produced"])
        return f"forward_fire rule {ev['rule']}: {consumed} => {produced}"
    if move in ("choose_left", "choose_right"):
        return f"{move} of {ev['goal']}"
    if move == "instantiate":
        return f"instantiate {ev['var']} = {ev['value']}"
    if move == "unfold_agent":
        return f"unfold_agent {ev['agent']}"
    return move


def _show_request(record: dict, out) -> None:
    print(record["prompt"], file=out)
    options = record.get("options")
    if record["kind"] == "branch" and options:
        print(f"  left:  {options[0]}", file=out)
        print(f"  right: {options[1]}", file=out)
    elif options:
        print("  one of: " + ", ".join(options), file=out)


def cmd_repl(args) -> int:
    prog = load_program(args.file)
    out = sys.stdout
    print(f"loaded {args.file}; type a query like `?- t.`, or :quit", file=out)

    def ask(prompt: str) -> str | None:
        print(prompt, end="", flush=True, file=out)
        line = sys.stdin.readline()
        if not line:
            return None
        return line.strip()

    while True:
        line = ask("clt> ")
        if line is None or line == ":quit":
            return EX_WON
        if not line:
            continue
        try:
            query = parse_query(line, prog)
        except ParseError as exc:
            print(f"parse error at {exc}", file=out)
            continue
        session = Session(prog, query, max_fires=_fire_limit(args))
        session.start()
        quit_requested = False
        while session.pending is not None:
            _show_request(session.pending, out)
            pick = ask("> ")
            if pick is None or pick == ":quit":
                quit_requested = True
                break
            if not pick:
                continue
            try:
                session.apply_env_move(pick)
            except MoveError as exc:
                print(f"  {exc}", file=out)
        if quit_requested:
            return EX_WON
        if args.trace:
            write_trace(args.trace, session)
            for record in session.records:
                if record["type"] == "event":
                    print("  " + _format_event(record["event"]), file=out)
        for text in outcome_lines(session.outcome):
            print(text, file=out)


# --------------------------------------------------------------------- verify


def parse_domain_arg(spec: str) -> tuple[str, tuple]:
    name, eq, rest = spec.partition("=")
    name = name.strip()
    if not eq or not name or not rest.strip():
        raise CliError(f"bad --domain (want 'Y=0,1,2'): {spec!r}")
    try:
        values = tuple(normalize(parse_term(v.strip())) for v in rest.split(","))
    except ParseError as exc:
        raise CliError(f"bad --domain value in {spec!r}: {exc}") from None
    return name, values


def cmd_verify(args) -> int:
    prog = load_program(args.file)
    query = parse_query_arg(args.query, prog)
    domains = dict(parse_domain_arg(d) for d in args.domain or [])
    try:
        winnable, plays = verify_winnable(prog, query, domains=domains,
                                          max_fires=_fire_limit(args))
    except VerifyError as exc:
        code = EX_USAGE if exc.code == "infinite-env-domain" else EX_LIMIT
        raise CliError(f"{exc.code}: {exc}", code) from None
    print(f"winnable: {'true' if winnable else 'false'} ({plays} plays)")
    return EX_WON if winnable else EX_LOST


# ---------------------------------------------------------------------- serve


def cmd_serve(args) -> int:
    from . import server

    env_max_fires()  # fail fast on a bad value, before accepting connections
    srv = server.make_server(args.host, args.port)
    host, port = srv.server_address[:2]
    print(f"serving on {host}:{port}", flush=True)
    try:
        srv.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        srv.shutdown()
        srv.server_close()
    return EX_WON


# ----------------------------------------------------------------- dispatcher


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="clt", description="Interpreter and playground for task-logic programs.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def fires(p):
        p.add_argument("--max-fires", type=int, dest="max_fires", metavar="N",
                       help="cap on forward rule firings per play "
                            "(default 512, or CLT_MAX_FIRES)")

    p = sub.add_parser("run", help="play one query with scripted moves")
    p.add_argument("file", help="program file, or a bundled program name")
    p.add_argument("--query", required=True, metavar="Q", help="query, like '?- t.'")
    p.add_argument("--moves", metavar="FILE",
                   help="environment moves, one per line, in request order")
    p.add_argument("--trace", metavar="PATH", help="write the session records to PATH")
    fires(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("repl", help="play queries interactively")
    p.add_argument("file", help="program file, or a bundled program name")
    p.add_argument("--trace", metavar="PATH",
                   help="echo machine events and write the last query's records to PATH")
    fires(p)
    p.set_defaults(fn=cmd_repl)

    p = sub.add_parser("verify", help="check every environment play is won")
    p.add_argument("file", help="program file, or a bundled program name")
    p.add_argument("--query", required=True, metavar="Q")
    p.add_argument("--domain", action="append", metavar="X=a,b,c",
                   help="values an environment choice ranges over (repeatable)")
    fires(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("serve", help="serve sessions over newline-delimited JSON")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765,
                   help="listening port; 0 picks a free one (default 8765)")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "fn"):
            parser.print_usage(sys.stderr)
            print("clt: a subcommand is required", file=sys.stderr)
            return EX_USAGE
        return args.fn(args)
    except CliError as exc:
        print(f"clt: {exc}", file=sys.stderr)
        return exc.code
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())

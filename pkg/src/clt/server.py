"""Socket service for the playground: sessions over newline-delimited JSON.

One connection holds at most one live session.  The client sends `load`,
`query`, and `env_move` records; the server streams back the session's
own record list (requests, the canonicalized moves, events, results), so
the bytes on the wire are the trace file.  Recoverable mistakes (a stale
choice id, an unparsable program) come back as `error` records and the
connection stays up; an undecodable message closes it.
"""

from __future__ import annotations

import json
import socketserver

from .cli import env_max_fires
from .engine import EngineError, Session
from .library import PROGRAM_NAMES, bundled_source
from .syntax import ParseError, Program, parse_program, parse_query

_LIMIT_KEYS = ("max_fires", "max_depth", "max_steps")


class _CloseConnection(Exception):
    pass


class _Handler(socketserver.StreamRequestHandler):
    program: Program | None
    session: Session | None
    sent: int

    def setup(self):
        super().setup()
        self.program = None
        self.session = None
        self.sent = 0

    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            try:
                self.dispatch(line)
            except _CloseConnection:
                return
            except (BrokenPipeError, ConnectionResetError):
                return

    def send(self, record: dict) -> None:
        data = json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"
        self.wfile.write(data.encode("utf-8"))
        self.wfile.flush()

    def error(self, code: str, message: str, *, close: bool = False, **extra) -> None:
        self.send({"type": "error", "code": code, "message": message, **extra})
        if close:
            raise _CloseConnection

    def flush_session(self) -> None:
        records = self.session.records
        while self.sent < len(records):
            self.send(records[self.sent])
            self.sent += 1

    def dispatch(self, line: str) -> None:
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            self.error("malformed", f"undecodable message: {exc}", close=True)
        if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
            self.error("malformed", "message must be an object with a type field",
                       close=True)
        kind = msg["type"]
        if kind == "load":
            self.do_load(msg)
        elif kind == "query":
            self.do_query(msg)
        elif kind == "env_move":
            self.do_env_move(msg)
        else:
            self.error("malformed", f"unknown message type {kind!r}", close=True)

    def do_load(self, msg: dict) -> None:
        name = msg.get("name")
        text = msg.get("program")
        if isinstance(name, str):
            if name not in PROGRAM_NAMES:
                return self.error("no-program", f"no bundled program named {name!r}")
            text = bundled_source(name)
        if not isinstance(text, str):
            return self.error("no-program", "load needs a program text or a name")
        try:
            self.program = parse_program(text)
        except ParseError as exc:
            return self.error("parse", exc.message, line=exc.line, col=exc.col)
        self.session = None
        self.sent = 0

    def do_query(self, msg: dict) -> None:
        if self.program is None:
            return self.error("no-program", "load a program before querying")
        text = msg.get("text")
        if not isinstance(text, str):
            return self.error("bad-query", "query needs a text field")
        try:
            query = parse_query(text, self.program)
        except ParseError as exc:
            return self.error("parse", exc.message, line=exc.line, col=exc.col)
        limits = msg.get("limits") or {}
        if not isinstance(limits, dict):
            return self.error("bad-query", "limits must be an object")
        kw = {}
        for key in _LIMIT_KEYS:
            if key in limits:
                if not isinstance(limits[key], int) or limits[key] < 0:
                    return self.error("bad-query", f"{key} must be a nonnegative integer")
                kw[key] = limits[key]
        kw.setdefault("max_fires", env_max_fires())
        self.session = Session(self.program, query, **kw)
        self.sent = 0
        self.session.start()
        self.flush_session()

    def do_env_move(self, msg: dict) -> None:
        if self.session is None:
            return self.error("no-session", "no query is in play")
        pick = msg.get("pick")
        if not isinstance(pick, str):
            return self.error("invalid-move", "pick must be a string")
        choice_id = msg.get("choice_id")
        if choice_id is not None and not isinstance(choice_id, int):
            return self.error("invalid-move", "choice_id must be an integer")
        try:
            self.session.apply_env_move(pick, choice_id=choice_id)
        except EngineError as exc:
            return self.error(exc.code, str(exc))
        self.flush_session()


class PlaygroundServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def make_server(host: str = "127.0.0.1", port: int = 8765) -> PlaygroundServer:
    return PlaygroundServer((host, port), _Handler)

"""Command-line tests, driven through real subprocesses.

Each case runs `python -m clt ...` and checks printed text and exit
codes; the trace-file cases pin batch, interactive, and frozen traces
to the same bytes.
"""

import os
import subprocess
import sys
from importlib import resources
from pathlib import Path

import pytest


def clt(*args, stdin=None, env_extra=None, cwd=None):
    env = os.environ.copy()
    env.pop("CLT_MAX_FIRES", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "clt", *args],
        input=stdin, capture_output=True, text=True, env=env, cwd=cwd, timeout=60)


def moves_file(tmp_path, *picks):
    path = tmp_path / "moves"
    path.write_text("".join(f"{p}\n" for p in picks), encoding="utf-8")
    return str(path)


def golden(name):
    return resources.files("clt").joinpath(f"golden/{name}").read_text("utf-8")


# ------------------------------------------------------------------------ run


def test_run_factorial_scripted(tmp_path):
    r = clt("run", "factorial.clt", "--query", "?- @Y.#Z.fac(Y,Z).",
            "--moves", moves_file(tmp_path, "5"))
    assert r.returncode == 0
    assert r.stdout == "Won  Z = 120\n"


def test_run_accepts_name_prefixed_values(tmp_path):
    r = clt("run", "factorial.clt", "--query", "?- @Y.#Z.fac(Y,Z).",
            "--moves", moves_file(tmp_path, "Y=5"))
    assert r.stdout == "Won  Z = 120\n"


def test_moves_file_skips_blanks_and_comments(tmp_path):
    path = tmp_path / "moves"
    path.write_text("% scripted reply\n\nY=3\n", encoding="utf-8")
    r = clt("run", "factorial", "--query", "?- @Y.#Z.fac(Y,Z).", "--moves", str(path))
    assert r.stdout == "Won  Z = 6\n"


def test_run_lottery_both_branches(tmp_path):
    left = clt("run", "lottery.clt", "--query", "?- t.",
               "--moves", moves_file(tmp_path, "left"))
    assert (left.returncode, left.stdout) == (0, "output v(0)\nWon\n")
    right = clt("run", "lottery", "--query", "?- t.",
                "--moves", moves_file(tmp_path, "right"))
    assert (right.returncode, right.stdout) == (0, "output v(1000000)\nWon\n")


def test_run_fastfood_combo(tmp_path):
    r = clt("run", "fastfood", "--query", "?- c /\\ d.",
            "--moves", moves_file(tmp_path, "5", "6"))
    assert r.returncode == 0
    assert r.stdout.splitlines() == [
        "output m(ham)", "output m(coke)", "output m(2)",
        "output m(fi)", "output m(coke)", "output m(2)", "Won"]


def test_run_fastfood_underpayment_is_vacuous(tmp_path):
    r = clt("run", "fastfood", "--query", "?- c.",
            "--moves", moves_file(tmp_path, "2"))
    assert (r.returncode, r.stdout) == (0, "Won\n")


def test_run_local_file_beats_bundled_name(tmp_path):
    own = tmp_path / "lottery.clt"
    own.write_text("output w/1.\nagent t = w(1) & w(2).\n", encoding="utf-8")
    r = clt("run", "lottery.clt", "--query", "?- t.",
            "--moves", moves_file(tmp_path, "left"), cwd=str(tmp_path))
    assert r.stdout == "output w(1)\nWon\n"


def test_run_missing_move_is_a_usage_error():
    r = clt("run", "factorial.clt", "--query", "?- @Y.#Z.fac(Y,Z).")
    assert r.returncode == 3
    assert "unanswered environment request" in r.stderr


def test_run_surplus_move_is_a_usage_error(tmp_path):
    r = clt("run", "lottery", "--query", "?- t.",
            "--moves", moves_file(tmp_path, "left", "right"))
    assert r.returncode == 3
    assert "surplus" in r.stderr


def test_run_invalid_move_is_a_usage_error(tmp_path):
    r = clt("run", "lottery", "--query", "?- t.",
            "--moves", moves_file(tmp_path, "sideways"))
    assert r.returncode == 3
    assert "left" in r.stderr


def test_run_lost_exits_1(tmp_path):
    empty = tmp_path / "empty.clt"
    empty.write_text("", encoding="utf-8")
    r = clt("run", str(empty), "--query", "?- p.")
    assert (r.returncode, r.stdout) == (1, "Lost\n")


def test_run_resource_limit_exits_2(tmp_path):
    r = clt("run", "factorial", "--query", "?- c -> fac(1, 2).", "--max-fires", "4")
    assert (r.returncode, r.stdout) == (2, "Resource limit (fires)\n")


def test_run_unknown_program_exits_3():
    r = clt("run", "nosuch.clt", "--query", "?- t.")
    assert r.returncode == 3
    assert "no such file or bundled program" in r.stderr


def test_run_query_parse_error_exits_3():
    r = clt("run", "lottery", "--query", "?- t")
    assert r.returncode == 3
    assert "query:1:" in r.stderr


def test_program_parse_error_reports_position(tmp_path):
    bad = tmp_path / "bad.clt"
    bad.write_text("agent = v(0).\n", encoding="utf-8")
    r = clt("run", str(bad), "--query", "?- t.")
    assert r.returncode == 3
    assert f"{bad}:1:" in r.stderr


def test_usage_errors_exit_3():
    assert clt().returncode == 3
    assert clt("run", "lottery").returncode == 3  # --query is required
    assert clt("frobnicate").returncode == 3


def test_trace_of_bare_query_matches_golden(tmp_path):
    trace = tmp_path / "t.jsonl"
    r = clt("run", "factorial.clt", "--query", "?- @Y.#Z.fac(Y,Z).",
            "--moves", moves_file(tmp_path, "5"), "--trace", str(trace))
    assert r.returncode == 0
    assert trace.read_text("utf-8") == golden("factorial_y5.jsonl")


def test_max_fires_env_var(tmp_path):
    moves = moves_file(tmp_path, "5")
    limited = clt("run", "factorial", "--query", "?- @Y.#Z.fac(Y,Z).",
                  "--moves", moves, env_extra={"CLT_MAX_FIRES": "3"})
    assert (limited.returncode, limited.stdout) == (2, "Resource limit (fires)\n")
    flag_wins = clt("run", "factorial", "--query", "?- @Y.#Z.fac(Y,Z).",
                    "--moves", moves, "--max-fires", "16",
                    env_extra={"CLT_MAX_FIRES": "3"})
    assert (flag_wins.returncode, flag_wins.stdout) == (0, "Won  Z = 120\n")


def test_garbage_max_fires_env_var_exits_3(tmp_path):
    r = clt("run", "factorial", "--query", "?- @Y.#Z.fac(Y,Z).",
            "--moves", moves_file(tmp_path, "5"),
            env_extra={"CLT_MAX_FIRES": "lots"})
    assert r.returncode == 3
    assert "CLT_MAX_FIRES" in r.stderr


# ----------------------------------------------------------------------- repl


def test_repl_lottery_transcript():
    r = clt("repl", "lottery", stdin="?- t.\nleft\n:quit\n")
    assert r.returncode == 0
    out = r.stdout
    assert "how much is the final value?" in out
    assert "left:  v(0)" in out
    assert "right: v(1000000)" in out
    assert "output v(0)" in out
    assert "Won" in out


def test_repl_generated_value_prompt():
    r = clt("repl", "fastfood", stdin="?- c /\\ d.\n5\n6\n:quit\n")
    assert "choose a value for X" in r.stdout
    assert "output m(ham)" in r.stdout
    assert r.stdout.count("output m(coke)") == 2


def test_repl_trace_equals_batch_trace(tmp_path):
    batch = tmp_path / "batch.jsonl"
    live = tmp_path / "live.jsonl"
    clt("run", "lottery", "--query", "?- t.",
        "--moves", moves_file(tmp_path, "right"), "--trace", str(batch))
    r = clt("repl", "lottery", "--trace", str(live), stdin="?- t.\nright\n:quit\n")
    assert r.returncode == 0
    assert live.read_bytes() == batch.read_bytes()


def test_repl_echoes_events_when_tracing(tmp_path):
    r = clt("repl", "factorial", "--trace", str(tmp_path / "t.jsonl"),
            stdin="?- c -> @Y.#Z.fac(Y, Z).\n2\n:quit\n")
    assert "forward_fire rule 0" in r.stdout
    assert "Won  Z = 2" in r.stdout


def test_repl_reprompts_on_bad_query():
    r = clt("repl", "lottery", stdin="?- t\n?- t.\nleft\n:quit\n")
    assert r.returncode == 0
    assert "parse error" in r.stdout
    assert "Won" in r.stdout


def test_repl_reprompts_on_bad_pick():
    r = clt("repl", "lottery", stdin="?- t.\nsideways\nleft\n:quit\n")
    assert r.returncode == 0
    assert r.stdout.count("how much is the final value?") == 2
    assert "Won" in r.stdout


def test_repl_quits_on_eof():
    assert clt("repl", "lottery", stdin="").returncode == 0
    assert clt("repl", "lottery", stdin="?- t.\n").returncode == 0


# --------------------------------------------------------------------- verify


def test_verify_lottery():
    r = clt("verify", "lottery.clt", "--query", "?- t.")
    assert (r.returncode, r.stdout) == (0, "winnable: true (2 plays)\n")


def test_verify_factorial_over_domain():
    r = clt("verify", "factorial", "--query", "?- @Y.#Z.fac(Y,Z).",
            "--domain", "Y=0,1,2,3")
    assert (r.returncode, r.stdout) == (0, "winnable: true (4 plays)\n")


def test_verify_without_domain_exits_3():
    r = clt("verify", "factorial", "--query", "?- @Y.#Z.fac(Y,Z).")
    assert r.returncode == 3
    assert "infinite-env-domain" in r.stderr


def test_verify_unwinnable_exits_1(tmp_path):
    empty = tmp_path / "empty.clt"
    empty.write_text("", encoding="utf-8")
    r = clt("verify", str(empty), "--query", "?- p.")
    assert (r.returncode, r.stdout) == (1, "winnable: false (1 plays)\n")


def test_verify_rejects_malformed_domain():
    r = clt("verify", "factorial", "--query", "?- @Y.#Z.fac(Y,Z).",
            "--domain", "Y:0,1")
    assert r.returncode == 3
    assert "--domain" in r.stderr

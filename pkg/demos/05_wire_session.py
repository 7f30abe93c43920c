#!/usr/bin/env python3
"""One session over the wire, annotated.

Starts `clt serve` on a free port, plays the lottery as the
environment, and prints both sides of the exchange.  The records the
server streams back are exactly the lines a `--trace` file holds.
"""

import json
import socket
import subprocess
import sys

proc = subprocess.Popen(["clt", "serve", "--port", "0"],
                        stdout=subprocess.PIPE, text=True)
banner = proc.stdout.readline().strip()
print(f"# {banner}")
host, _, port = banner.rpartition(" ")[2].rpartition(":")

sock = socket.create_connection((host, int(port)))
wire = sock.makefile("rw", encoding="utf-8", newline="\n")


def send(**record):
    line = json.dumps(record)
    print(f"-> {line}")
    wire.write(line + "\n")
    wire.flush()


def recv():
    record = json.loads(wire.readline())
    print(f"<- {json.dumps(record)}")
    return record


try:
    send(type="load", name="lottery")
    send(type="query", text="?- t.")
    request = recv()
    send(type="env_move", choice_id=request["choice_id"], pick="left")
    while recv()["type"] != "result":
        pass
finally:
    sock.close()
    proc.terminate()
    proc.wait()

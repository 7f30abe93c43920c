import { describe, expect, it } from "vitest";
import { Phase, SessionClient } from "../src/session.js";
import type { ServerRecord } from "../src/protocol.js";
import { FakeSocket, LOTTERY_REQUEST } from "./helpers.js";

function makeClient() {
  const sock = new FakeSocket();
  const phases: Phase[] = [];
  const records: ServerRecord[] = [];
  const raws: string[] = [];
  const closes: string[] = [];
  const client = new SessionClient(() => sock, {
    onPhase: (p) => phases.push(p),
    onRecord: (rec, raw) => {
      records.push(rec);
      raws.push(raw);
    },
    onClose: (reason) => closes.push(reason),
  });
  return { sock, client, phases, records, raws, closes };
}

describe("phases", () => {
  it("starts connecting and idles on open", () => {
    const { sock, client, phases } = makeClient();
    expect(client.phase).toBe("connecting");
    sock.open();
    expect(client.phase).toBe("idle");
    expect(phases).toEqual(["idle"]);
  });

  it("refuses to run before the socket opens", () => {
    const { client } = makeClient();
    expect(() => client.run(null, "?- t.")).toThrow(/connecting/);
  });

  it("run sends load then query and starts searching", () => {
    const { sock, client } = makeClient();
    sock.open();
    client.run({ type: "load", name: "lottery" }, "?- t.");
    expect(sock.sentJson()).toEqual([
      { type: "load", name: "lottery" },
      { type: "query", text: "?- t." },
    ]);
    expect(client.phase).toBe("searching");
    expect(() => client.run(null, "?- t.")).toThrow(/searching/);
  });

  it("an env_request makes the session answerable", () => {
    const { sock, client } = makeClient();
    sock.open();
    client.run(null, "?- t.");
    sock.line(LOTTERY_REQUEST);
    expect(client.phase).toBe("prompting");
    expect(client.pending?.choice_id).toBe(1);

    client.envMove("left");
    expect(sock.sentJson().at(-1)).toEqual({
      type: "env_move",
      choice_id: 1,
      pick: "left",
    });
    expect(client.phase).toBe("searching");
    expect(() => client.envMove("left")).toThrow(/searching/);
  });

  it("a result returns to idle and clears the pending request", () => {
    const { sock, client } = makeClient();
    sock.open();
    client.run(null, "?- t.");
    sock.line(LOTTERY_REQUEST);
    client.envMove("left");
    sock.line({ type: "env_move", choice_id: 1, pick: "left" });
    sock.line({ type: "event", event: { move: "unfold_agent", agent: "t" } });
    sock.line({ type: "result", status: "won", bindings: {}, outputs: ["v(0)"] });
    expect(client.phase).toBe("idle");
    expect(client.pending).toBeNull();
  });
});

describe("errors", () => {
  it("a rejected move leaves the request answerable", () => {
    const { sock, client } = makeClient();
    sock.open();
    client.run(null, "?- t.");
    sock.line(LOTTERY_REQUEST);
    client.envMove("left");
    sock.line({
      type: "error",
      code: "stale-choice",
      message: "move is for request 8, current is 1",
    });
    expect(client.phase).toBe("prompting");
    expect(client.pending?.choice_id).toBe(1);
    client.envMove("right");
    expect(sock.sentJson().at(-1)).toMatchObject({ pick: "right" });
  });

  it("a failed query returns to idle", () => {
    const { sock, client } = makeClient();
    sock.open();
    client.run(null, "?- t");
    sock.line({ type: "error", code: "parse", message: "expected '.'", line: 1, col: 5 });
    expect(client.phase).toBe("idle");
    expect(client.pending).toBeNull();
  });
});

describe("transport", () => {
  it("handles several lines in one message, in order", () => {
    const { sock, client, records } = makeClient();
    sock.open();
    client.run(null, "?- t.");
    const lines = [
      JSON.stringify({ type: "event", event: { move: "unfold_agent", agent: "t" } }),
      JSON.stringify({ type: "result", status: "lost", bindings: {}, outputs: [] }),
    ];
    sock.line(lines.join("\n") + "\n");
    expect(records.map((r) => r.type)).toEqual(["event", "result"]);
    expect(client.phase).toBe("idle");
  });

  it("decodes binary frames", () => {
    const { sock, records } = makeClient();
    sock.open();
    const payload = new TextEncoder().encode(
      '{"type":"result","status":"lost","bindings":{},"outputs":[]}',
    );
    sock.emit("message", { data: payload });
    expect(records).toHaveLength(1);
    expect(records[0].type).toBe("result");
  });

  it("hands each raw line through untouched", () => {
    const { sock, raws } = makeClient();
    sock.open();
    const raw = '{"bindings":{},"outputs":["v(0)"],"status":"won","type":"result"}';
    sock.line(raw);
    expect(raws).toEqual([raw]);
  });

  it("closes on a stream that stops looking like the protocol", () => {
    const { sock, client, closes } = makeClient();
    sock.open();
    sock.line('{"type":"surprise"}');
    expect(client.phase).toBe("closed");
    expect(sock.closedByClient).toBe(true);
    expect(closes).toHaveLength(1);
  });

  it("reports a dropped connection", () => {
    const { sock, client, closes } = makeClient();
    sock.open();
    sock.emit("close", {});
    expect(client.phase).toBe("closed");
    expect(closes).toEqual(["connection closed"]);
    // no further phase flapping once closed
    sock.emit("error", {});
    expect(closes).toHaveLength(1);
  });
});

/** Protocol client with the input-gating state machine.
 *
 * The one rule every surface shares: between sending a query or an
 * env_move and receiving the next env_request or result, no further
 * input may be submitted.  The view disables controls off the phase;
 * the methods here also throw, so a misbehaving caller cannot race
 * the server.  Records are handled synchronously in arrival order.
 */

import {
  EnvRequest,
  ServerRecord,
  ClientMessage,
  LoadMessage,
  encodeMessage,
  parseRecord,
} from "./protocol.js";

export type Phase = "connecting" | "idle" | "searching" | "prompting" | "closed";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, listener: (event: any) => void): void;
}

export interface SessionEvents {
  onRecord?: (rec: ServerRecord, raw: string) => void;
  onPhase?: (phase: Phase) => void;
  onClose?: (reason: string) => void;
}

// error codes that leave the pending request answerable
const RETRY_CODES = new Set(["stale-choice", "invalid-move", "out-of-domain"]);

export class SessionClient {
  phase: Phase = "connecting";
  pending: EnvRequest | null = null;
  private sock: SocketLike;
  private ev: SessionEvents;

  constructor(makeSocket: () => SocketLike, events: SessionEvents = {}) {
    this.ev = events;
    this.sock = makeSocket();
    this.sock.addEventListener("open", () => this.setPhase("idle"));
    this.sock.addEventListener("message", (e: { data: unknown }) =>
      this.feed(e.data),
    );
    this.sock.addEventListener("close", () => this.closed("connection closed"));
    this.sock.addEventListener("error", () => this.closed("connection failed"));
  }

  /** Send an optional load followed by a query; the server answers with
   * a fresh session's record stream. */
  run(load: LoadMessage | null, query: string): void {
    this.require("idle");
    if (load) this.send(load);
    this.send({ type: "query", text: query });
    this.pending = null;
    this.setPhase("searching");
  }

  envMove(pick: string): void {
    this.require("prompting");
    const req = this.pending;
    if (req === null) throw new Error("no pending request");
    this.send({ type: "env_move", choice_id: req.choice_id, pick });
    // keep `pending` so a rejected move can be retried; the phase is
    // what gates input
    this.setPhase("searching");
  }

  close(): void {
    this.sock.close();
  }

  private require(...phases: Phase[]): void {
    if (!phases.includes(this.phase)) {
      throw new Error(`cannot send while ${this.phase}`);
    }
  }

  private send(msg: ClientMessage): void {
    this.sock.send(encodeMessage(msg));
  }

  private setPhase(phase: Phase): void {
    if (this.phase === "closed") return;
    this.phase = phase;
    this.ev.onPhase?.(phase);
  }

  private feed(data: unknown): void {
    const text =
      typeof data === "string"
        ? data
        : new TextDecoder().decode(data as ArrayBufferView | ArrayBuffer);
    for (const line of text.split("\n")) {
      if (line === "") continue;
      this.handleLine(line);
    }
  }

  private handleLine(raw: string): void {
    let rec: ServerRecord;
    try {
      rec = parseRecord(raw);
    } catch (exc) {
      this.sock.close();
      this.closed(String(exc));
      return;
    }
    switch (rec.type) {
      case "env_request":
        this.pending = rec;
        this.setPhase("prompting");
        break;
      case "env_move":
      case "event":
        break;
      case "result":
        this.pending = null;
        this.setPhase("idle");
        break;
      case "error":
        if (RETRY_CODES.has(rec.code) && this.pending !== null) {
          this.setPhase("prompting");
        } else {
          this.pending = null;
          this.setPhase("idle");
        }
        break;
    }
    this.ev.onRecord?.(rec, raw);
  }

  private closed(reason: string): void {
    if (this.phase === "closed") return;
    this.phase = "closed";
    this.ev.onPhase?.("closed");
    this.ev.onClose?.(reason);
  }
}

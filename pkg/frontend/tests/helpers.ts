import type { SocketLike } from "../src/session.js";

/** In-memory stand-in for a WebSocket: tests emit server lines and
 * inspect what the client sent. */
export class FakeSocket implements SocketLike {
  sent: string[] = [];
  closedByClient = false;
  private listeners = new Map<string, Array<(event: any) => void>>();

  addEventListener(type: string, listener: (event: any) => void): void {
    const bucket = this.listeners.get(type) ?? [];
    bucket.push(listener);
    this.listeners.set(type, bucket);
  }

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closedByClient = true;
    this.emit("close", {});
  }

  emit(type: string, event: unknown): void {
    for (const fn of this.listeners.get(type) ?? []) fn(event);
  }

  open(): void {
    this.emit("open", {});
  }

  line(record: unknown): void {
    const data =
      typeof record === "string" ? record : JSON.stringify(record);
    this.emit("message", { data });
  }

  sentJson(): unknown[] {
    return this.sent.map((s) => JSON.parse(s));
  }
}

export const LOTTERY_REQUEST = {
  choice_id: 1,
  kind: "branch",
  options: ["v(0)", "v(1000000)"],
  prompt: "how much is the final value?",
  snapshot: {
    goal: "v(0) & v(1000000)",
    store: { linear: [], reusable: [], rules: [] },
  },
  type: "env_request",
};

export const FACTORIAL_REQUEST = {
  choice_id: 1,
  kind: "value",
  prompt: "choose a value for Y",
  var: "Y",
  snapshot: {
    goal: "@Y.#Z.fac(Y, Z)",
    store: {
      linear: ["fac(0, 1)"],
      reusable: [],
      rules: ["fac(X, Y) -> fac(X+1, Y*(X+1))"],
    },
  },
  type: "env_request",
};

export async function until(
  check: () => boolean,
  what: string,
  deadlineMs = 8000,
): Promise<void> {
  const t0 = Date.now();
  while (!check()) {
    if (Date.now() - t0 > deadlineMs) throw new Error(`timed out: ${what}`);
    await new Promise((r) => setTimeout(r, 10));
  }
}

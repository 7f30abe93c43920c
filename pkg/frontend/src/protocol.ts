/** Wire records for the line-delimited JSON session protocol.
 *
 * One JSON object per line in both directions.  The server streams the
 * record types below; the client sends load, query, and env_move
 * messages.  Everything the server says about formulas arrives as
 * pre-rendered text, and this client keeps it that way: payloads are
 * display strings, never parsed further.
 */

export interface StoreView {
  linear: string[];
  reusable: string[];
  rules: string[];
}

export interface Snapshot {
  goal: string;
  store: StoreView;
}

export interface EnvRequest {
  type: "env_request";
  choice_id: number;
  kind: "branch" | "value";
  prompt: string;
  options?: string[];
  var?: string;
  snapshot: Snapshot;
}

export interface EnvMoveEcho {
  type: "env_move";
  choice_id: number;
  pick: string;
}

export interface MachineEvent {
  type: "event";
  event: { move: string } & Record<string, unknown>;
}

export interface Result {
  type: "result";
  status: "won" | "lost" | "resource-limit";
  bindings: Record<string, string>;
  outputs: string[];
  code?: string;
}

export interface ServerError {
  type: "error";
  code: string;
  message: string;
  line?: number;
  col?: number;
}

export type ServerRecord =
  | EnvRequest
  | EnvMoveEcho
  | MachineEvent
  | Result
  | ServerError;

export type LoadMessage =
  | { type: "load"; program: string }
  | { type: "load"; name: string };

export interface QueryLimits {
  max_fires?: number;
  max_depth?: number;
}

export interface QueryMessage {
  type: "query";
  text: string;
  limits?: QueryLimits;
}

export interface EnvMoveMessage {
  type: "env_move";
  choice_id: number;
  pick: string;
}

export type ClientMessage = LoadMessage | QueryMessage | EnvMoveMessage;

const SERVER_TYPES = new Set([
  "env_request",
  "env_move",
  "event",
  "result",
  "error",
]);

export function parseRecord(line: string): ServerRecord {
  let value: unknown;
  try {
    value = JSON.parse(line);
  } catch {
    throw new Error(`not a JSON record: ${line}`);
  }
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new Error(`record is not an object: ${line}`);
  }
  const type = (value as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) {
    throw new Error(`unrecognized record type: ${line}`);
  }
  return value as ServerRecord;
}

export function encodeMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

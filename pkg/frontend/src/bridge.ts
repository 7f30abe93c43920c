/** Line bridge between browser WebSockets and the interpreter's TCP
 * session endpoint.
 *
 * Browsers cannot open raw TCP sockets, so the page connects here
 * instead.  Each WebSocket connection gets its own upstream TCP
 * connection; every newline-terminated line from upstream is forwarded
 * as one WebSocket message with the line's bytes untouched, and every
 * WebSocket message goes upstream with a newline appended.  The bridge
 * adds, drops, and reorders nothing, so the browser speaks exactly the
 * serve protocol.
 *
 * The same process serves the static page, keeping the playground a
 * single origin: `node dist/bridge.js` then open http://127.0.0.1:8766
 * (with `clt serve` running on the default port).
 */

import http from "node:http";
import net from "node:net";
import { readFile } from "node:fs/promises";
import { StringDecoder } from "node:string_decoder";
import path from "node:path";
import { fileURLToPath, pathToFileURL } from "node:url";
import { WebSocketServer, WebSocket, RawData } from "ws";

export interface BridgeOptions {
  listenHost?: string;
  listenPort?: number; // 0 picks a free port
  upstreamHost?: string;
  upstreamPort?: number;
  staticRoot?: string | null; // null serves nothing but /ws
}

export interface Bridge {
  host: string;
  port: number;
  close(): Promise<void>;
}

const CONTENT_TYPES: Record<string, string> = {
  ".html": "text/html; charset=utf-8",
  ".js": "text/javascript; charset=utf-8",
  ".css": "text/css; charset=utf-8",
  ".map": "application/json",
  ".json": "application/json",
};

function packageRoot(): string {
  // this file lives in src/ or dist/, one level below the package
  return path.dirname(path.dirname(fileURLToPath(import.meta.url)));
}

function pipe(sock: WebSocket, host: string, port: number, tcps: Set<net.Socket>): void {
  const tcp = net.connect({ host, port });
  tcp.setNoDelay(true);
  tcps.add(tcp);
  const decoder = new StringDecoder("utf8");
  let buffer = "";
  tcp.on("data", (chunk) => {
    buffer += decoder.write(chunk);
    for (;;) {
      const nl = buffer.indexOf("\n");
      if (nl < 0) break;
      const line = buffer.slice(0, nl);
      buffer = buffer.slice(nl + 1);
      if (sock.readyState === WebSocket.OPEN) sock.send(line);
    }
  });
  tcp.on("close", () => {
    tcps.delete(tcp);
    // an unterminated tail would be a protocol violation upstream;
    // forward it anyway rather than swallow bytes
    const tail = buffer + decoder.end();
    if (tail !== "" && sock.readyState === WebSocket.OPEN) sock.send(tail);
    sock.close();
  });
  tcp.on("error", () => sock.close());
  sock.on("message", (data: RawData) => {
    tcp.write(data.toString() + "\n");
  });
  sock.on("close", () => tcp.destroy());
  sock.on("error", () => tcp.destroy());
}

async function serveStatic(
  root: string,
  pathname: string,
  res: http.ServerResponse,
): Promise<void> {
  const target = pathname === "/" ? "/index.html" : pathname;
  const file = path.resolve(root, "." + target);
  if (!file.startsWith(path.resolve(root) + path.sep)) {
    res.writeHead(404).end("not found\n");
    return;
  }
  try {
    const body = await readFile(file);
    const type = CONTENT_TYPES[path.extname(file)] ?? "application/octet-stream";
    res.writeHead(200, { "content-type": type }).end(body);
  } catch {
    res.writeHead(404).end("not found\n");
  }
}

export function startBridge(opts: BridgeOptions = {}): Promise<Bridge> {
  const listenHost = opts.listenHost ?? "127.0.0.1";
  const listenPort = opts.listenPort ?? 8766;
  const upstreamHost = opts.upstreamHost ?? "127.0.0.1";
  const upstreamPort = opts.upstreamPort ?? 8765;
  const staticRoot =
    opts.staticRoot === undefined ? packageRoot() : opts.staticRoot;

  const server = http.createServer((req, res) => {
    if (staticRoot === null || req.method !== "GET") {
      res.writeHead(404).end("not found\n");
      return;
    }
    const pathname = new URL(req.url ?? "/", "http://host").pathname;
    void serveStatic(staticRoot, pathname, res);
  });

  const wss = new WebSocketServer({ server, path: "/ws" });
  const tcps = new Set<net.Socket>();
  wss.on("connection", (sock) => pipe(sock, upstreamHost, upstreamPort, tcps));

  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(listenPort, listenHost, () => {
      const addr = server.address() as net.AddressInfo;
      resolve({
        host: listenHost,
        port: addr.port,
        close: () =>
          new Promise<void>((done) => {
            for (const client of wss.clients) client.terminate();
            for (const tcp of tcps) tcp.destroy();
            wss.close(() => server.close(() => done()));
          }),
      });
    });
  });
}

function parsePort(text: string, flag: string): number {
  const port = Number(text);
  if (!Number.isInteger(port) || port < 0 || port > 65535) {
    throw new Error(`${flag} needs a port number, got "${text}"`);
  }
  return port;
}

function parseArgs(argv: string[]): BridgeOptions {
  const opts: BridgeOptions = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      const v = argv[++i];
      if (v === undefined) throw new Error(`${arg} needs a value`);
      return v;
    };
    if (arg === "--listen") opts.listenPort = parsePort(next(), "--listen");
    else if (arg === "--host") opts.listenHost = next();
    else if (arg === "--upstream") {
      const value = next();
      const colon = value.lastIndexOf(":");
      if (colon <= 0) throw new Error(`--upstream needs HOST:PORT, got "${value}"`);
      opts.upstreamHost = value.slice(0, colon);
      opts.upstreamPort = parsePort(value.slice(colon + 1), "--upstream");
    } else if (arg === "--no-static") opts.staticRoot = null;
    else throw new Error(`unknown argument ${arg}`);
  }
  return opts;
}

async function main(): Promise<void> {
  let opts: BridgeOptions;
  try {
    opts = parseArgs(process.argv.slice(2));
  } catch (exc) {
    console.error(String(exc));
    console.error(
      "usage: node bridge.js [--listen PORT] [--host HOST] [--upstream HOST:PORT] [--no-static]",
    );
    process.exit(2);
  }
  const bridge = await startBridge(opts);
  const upstream = `${opts.upstreamHost ?? "127.0.0.1"}:${opts.upstreamPort ?? 8765}`;
  console.log(
    `bridge on http://${bridge.host}:${bridge.port} (ws at /ws) -> ${upstream}`,
  );
  process.on("SIGINT", () => {
    void bridge.close().then(() => process.exit(0));
  });
}

if (
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href
) {
  void main();
}

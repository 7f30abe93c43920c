/** DOM shell for one playground session.
 *
 * Layout: program editor with presets and a query row, a request area
 * that shows at most one pending prompt, and panels for the store,
 * the outputs ledger, and the scrolling trace.  The trace keeps each
 * record's raw line in a data attribute, so what the panel displays is
 * exactly the stream the server sent, in order.
 *
 * All semantics live server-side.  This file moves strings between
 * records and elements and gates input off the session phase; it never
 * interprets a formula beyond displaying it.
 */

import {
  EnvRequest,
  LoadMessage,
  MachineEvent,
  Result,
  ServerError,
  ServerRecord,
  StoreView,
} from "./protocol.js";
import { Phase, SessionClient, SocketLike } from "./session.js";

export interface PresetSpec {
  name: string;
  query: string;
}

export const PRESETS: PresetSpec[] = [
  { name: "factorial", query: "?- @Y.#Z.fac(Y, Z)." },
  { name: "lottery", query: "?- t." },
  { name: "fastfood", query: "?- c /\\ d." },
  { name: "horn", query: "?- prover -> pv(p(a), some(\\x.p(x)))." },
];

export interface PlaygroundOptions {
  makeSocket: () => SocketLike;
  presets?: PresetSpec[];
}

export interface Playground {
  client: SessionClient;
  root: HTMLElement;
}

export function formatEvent(ev: MachineEvent["event"]): string {
  switch (ev.move) {
    case "match_store":
      return `match_store ${ev.matched} (${ev.linear ? "linear" : "reusable"})`;
    case "builtin_check":
      return `builtin_check ${ev.atom} -> ${ev.truth}`;
    case "emit_output":
      return `emit_output ${ev.atom}`;
    case "backchain":
      return `backchain rule ${ev.rule} on ${ev.goal}`;
    case "forward_fire": {
      const consumed = (ev.consumed as string[]).join(", ") || "nothing";
      const produced = (ev.produced as string[]).join(", ");
      return `forward_fire rule ${ev.rule}: ${consumed} => ${produced}`;
    }
    case "choose_left":
    case "choose_right":
      return `${ev.move} of ${ev.goal}`;
    case "instantiate":
      return `instantiate ${ev.var} = ${ev.value}`;
    case "unfold_agent":
      return `unfold_agent ${ev.agent}`;
    default:
      return ev.move;
  }
}

function removeOne(items: string[], item: string): void {
  const i = items.indexOf(item);
  if (i >= 0) items.splice(i, 1);
}

export function mountPlayground(
  root: HTMLElement,
  opts: PlaygroundOptions,
): Playground {
  const doc = root.ownerDocument;
  if (doc === null) throw new Error("root element is not in a document");
  const presets = opts.presets ?? PRESETS;

  const el = <K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className: string,
    parent: HTMLElement,
    text?: string,
  ): HTMLElementTagNameMap[K] => {
    const node = doc.createElement(tag);
    node.className = className;
    if (text !== undefined) node.textContent = text;
    parent.appendChild(node);
    return node;
  };

  root.classList.add("playground");

  const banner = el("div", "banner", root);
  banner.hidden = true;

  const programSection = el("section", "program-section", root);
  const presetRow = el("div", "presets", programSection);
  const programText = el("textarea", "program-text", programSection);
  programText.rows = 8;
  programText.placeholder = "agent declarations, or pick a preset";
  const programError = el("div", "inline-error program-error", programSection);
  programError.hidden = true;
  const queryRow = el("div", "query-row", programSection);
  const queryText = el("input", "query-text", queryRow);
  queryText.placeholder = "?- t.";
  const runButton = el("button", "run", queryRow, "Run");
  const queryError = el("div", "inline-error query-error", programSection);
  queryError.hidden = true;

  const requestSection = el("section", "request-section", root);
  requestSection.hidden = true;
  const requestPrompt = el("div", "request-prompt", requestSection);
  const requestGoal = el("div", "request-goal", requestSection);
  const requestControls = el("div", "request-controls", requestSection);
  const requestError = el("div", "inline-error request-error", requestSection);
  requestError.hidden = true;

  const panels = el("div", "panels", root);
  const storePanel = el("section", "store-panel", panels);
  el("h3", "", storePanel, "Store");
  el("h4", "", storePanel, "linear");
  const storeLinear = el("ul", "store-linear", storePanel);
  el("h4", "", storePanel, "reusable");
  const storeReusable = el("ul", "store-reusable", storePanel);
  el("h4", "", storePanel, "rules");
  const storeRules = el("ul", "store-rules", storePanel);
  const outputsPanel = el("section", "outputs-panel", panels);
  el("h3", "", outputsPanel, "Outputs");
  const outputsList = el("ul", "outputs", outputsPanel);
  const tracePanel = el("section", "trace-panel", panels);
  el("h3", "", tracePanel, "Trace");
  const traceList = el("ol", "trace", tracePanel);

  // ---------------------------------------------------------- state

  let loadMode: LoadMessage | null = null;
  // parse errors carry no hint of which message they answer; a load
  // sent as program text claims the first one, a load by name cannot
  // fail to parse so the error must be the query's
  let customProgramInFlight = false;
  let parseErrorShown = false;
  let store: StoreView = { linear: [], reusable: [], rules: [] };
  let outputs: string[] = [];

  const client = new SessionClient(opts.makeSocket, {
    onRecord: handleRecord,
    onPhase: renderPhase,
    onClose: (reason) => {
      if (!bannerShowsOutcome) showBanner("error", `connection lost: ${reason}`);
    },
  });
  let bannerShowsOutcome = false;

  // ---------------------------------------------------------- widgets

  for (const preset of presets) {
    const b = el("button", "preset", presetRow, preset.name);
    b.dataset.name = preset.name;
    b.addEventListener("click", () => {
      loadMode = { type: "load", name: preset.name };
      programText.value = `% bundled program "${preset.name}" (source lives on the server)`;
      queryText.value = preset.query;
      clearInlineErrors();
    });
  }

  programText.addEventListener("input", () => {
    loadMode = { type: "load", program: programText.value };
  });

  runButton.addEventListener("click", () => {
    if (client.phase !== "idle") return;
    clearSession();
    customProgramInFlight = loadMode !== null && "program" in loadMode;
    client.run(loadMode, queryText.value);
  });

  function renderRequest(req: EnvRequest): void {
    requestPrompt.textContent = req.prompt;
    requestGoal.textContent = `goal: ${req.snapshot.goal}`;
    requestControls.textContent = "";
    requestError.hidden = true;
    if (req.kind === "branch") {
      const options = req.options ?? ["left", "right"];
      options.forEach((label, i) => {
        const b = el("button", "pick", requestControls, label);
        b.dataset.side = i === 0 ? "left" : "right";
        b.addEventListener("click", () => {
          if (client.phase !== "prompting") return;
          client.envMove(b.dataset.side as string);
        });
      });
    } else {
      for (const option of req.options ?? []) {
        const b = el("button", "pick", requestControls, option);
        b.dataset.pick = option;
        b.addEventListener("click", () => {
          if (client.phase !== "prompting") return;
          client.envMove(option);
        });
      }
      const input = el("input", "value-input", requestControls);
      input.placeholder = req.var ?? "value";
      const send = el("button", "value-send", requestControls, "Send");
      const submit = () => {
        if (client.phase !== "prompting") return;
        const pick = input.value.trim();
        if (pick === "") {
          input.classList.add("invalid");
          showInline(requestError, "enter a value");
          return;
        }
        client.envMove(pick);
      };
      send.addEventListener("click", submit);
      input.addEventListener("keydown", (e) => {
        if ((e as KeyboardEvent).key === "Enter") submit();
      });
      input.addEventListener("input", () => {
        input.classList.remove("invalid");
        requestError.hidden = true;
      });
    }
  }

  // ---------------------------------------------------------- records

  function handleRecord(rec: ServerRecord, raw: string): void {
    if (rec.type === "error") {
      handleError(rec);
      return;
    }
    appendTrace(rec, raw);
    switch (rec.type) {
      case "env_request":
        store = {
          linear: [...rec.snapshot.store.linear],
          reusable: [...rec.snapshot.store.reusable],
          rules: [...rec.snapshot.store.rules],
        };
        renderStore();
        renderRequest(rec);
        break;
      case "env_move":
        break;
      case "event":
        applyEvent(rec.event);
        break;
      case "result":
        finish(rec);
        break;
    }
  }

  function applyEvent(ev: MachineEvent["event"]): void {
    if (ev.move === "forward_fire") {
      for (const atom of ev.consumed as string[]) removeOne(store.linear, atom);
      store.linear.push(...(ev.produced as string[]));
      renderStore();
    } else if (ev.move === "match_store" && ev.linear) {
      removeOne(store.linear, ev.matched as string);
      renderStore();
    } else if (ev.move === "emit_output") {
      outputs.push(ev.atom as string);
      renderOutputs();
    }
  }

  function finish(rec: Result): void {
    outputs = [...rec.outputs];
    renderOutputs();
    if (rec.status === "won") {
      const tail = Object.entries(rec.bindings)
        .map(([k, v]) => `  ${k} = ${v}`)
        .join("");
      showBanner("won", "Won" + tail);
    } else if (rec.status === "lost") {
      showBanner("lost", "Lost");
    } else {
      showBanner("limit", `Resource limit (${rec.code})`);
    }
    bannerShowsOutcome = true;
  }

  function handleError(rec: ServerError): void {
    const position =
      rec.line !== undefined && rec.col !== undefined
        ? `line ${rec.line}, col ${rec.col}: `
        : "";
    const text = position + rec.message;
    switch (rec.code) {
      case "parse":
        parseErrorShown = true;
        showInline(customProgramInFlight ? programError : queryError, text);
        customProgramInFlight = false;
        break;
      case "no-program":
        // a failed load already explains this one
        if (!parseErrorShown) showInline(queryError, text);
        break;
      case "bad-query":
        showInline(queryError, text);
        break;
      case "stale-choice":
      case "invalid-move":
      case "out-of-domain": {
        showInline(requestError, text);
        const input = requestControls.querySelector<HTMLInputElement>(".value-input");
        input?.classList.add("invalid");
        break;
      }
      default:
        showBanner("error", text);
    }
  }

  // ---------------------------------------------------------- render

  function renderPhase(phase: Phase): void {
    const idle = phase === "idle";
    runButton.disabled = !idle;
    for (const b of presetRow.querySelectorAll("button")) {
      (b as HTMLButtonElement).disabled = !idle;
    }
    requestSection.hidden = phase !== "prompting";
    for (const node of requestControls.querySelectorAll("button, input")) {
      (node as HTMLButtonElement | HTMLInputElement).disabled =
        phase !== "prompting";
    }
  }

  function renderList(list: HTMLElement, items: string[]): void {
    list.textContent = "";
    for (const item of items) el("li", "", list, item);
  }

  function renderStore(): void {
    renderList(storeLinear, store.linear);
    renderList(storeReusable, store.reusable);
    renderList(storeRules, store.rules);
  }

  function renderOutputs(): void {
    renderList(outputsList, outputs);
  }

  function appendTrace(rec: ServerRecord, raw: string): void {
    let text: string;
    switch (rec.type) {
      case "env_request":
        text = `? ${rec.prompt}`;
        break;
      case "env_move":
        text = `= ${rec.pick}`;
        break;
      case "event":
        text = formatEvent(rec.event);
        break;
      case "result":
        text = rec.status === "won" ? "result: won" : `result: ${rec.status}`;
        break;
      default:
        return;
    }
    const li = el("li", "", traceList, text);
    li.setAttribute("data-raw", raw);
    tracePanel.scrollTop = tracePanel.scrollHeight;
  }

  function showBanner(kind: "won" | "lost" | "limit" | "error", text: string): void {
    banner.className = `banner ${kind}`;
    banner.textContent = text;
    banner.hidden = false;
  }

  function showInline(node: HTMLElement, text: string): void {
    node.textContent = text;
    node.hidden = false;
  }

  function clearInlineErrors(): void {
    for (const node of [programError, queryError, requestError]) {
      node.hidden = true;
      node.textContent = "";
    }
  }

  function clearSession(): void {
    clearInlineErrors();
    banner.hidden = true;
    bannerShowsOutcome = false;
    parseErrorShown = false;
    store = { linear: [], reusable: [], rules: [] };
    outputs = [];
    renderStore();
    renderOutputs();
    traceList.textContent = "";
  }

  renderPhase(client.phase);
  return { client, root };
}

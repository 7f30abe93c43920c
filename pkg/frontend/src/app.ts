/** Browser entry point: connect to the bridge and mount the page.
 *
 * The socket endpoint defaults to /ws on the page's own host, which is
 * where the bridge serves it; a ?ws=... query parameter overrides the
 * target for pages served elsewhere.
 */

import { mountPlayground } from "./view.js";

const params = new URLSearchParams(window.location.search);
const wsUrl = params.get("ws") ?? `ws://${window.location.host}/ws`;

const root = document.getElementById("root");
if (root === null) throw new Error("missing #root element");

mountPlayground(root, { makeSocket: () => new WebSocket(wsUrl) });

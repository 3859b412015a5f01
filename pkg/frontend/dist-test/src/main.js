import { GatewayClient } from "./client.js";
import { FltView } from "./fltView.js";
import { Panel } from "./panel.js";
import { ReviewerView } from "./reviewerView.js";
import { Store } from "./store.js";
function byId(id) {
    const el = document.getElementById(id);
    if (!el)
        throw new Error(`missing element #${id}`);
    return el;
}
const params = new URLSearchParams(window.location.search);
const url = params.get("ws") ?? "ws://127.0.0.1:8765";
const store = new Store();
const client = new GatewayClient(url, store);
const reviewer = new ReviewerView(byId("reviewer"), store);
const fltView = new FltView(byId("flt"));
const panel = new Panel(byId("panel"), store, client);
client.connect();
let lastPanelKey = "";
function frame() {
    store.tick(Date.now());
    reviewer.render();
    fltView.render(store.flt, store.banner);
    // re-render the panel only when its inputs change (buttons keep focus)
    const s = store.session;
    const key = [
        store.connection,
        s?.phase,
        s?.nr,
        s?.collected.join(","),
        s?.trials_done,
        s ? s.t_d_s.toFixed(0) : "",
        store.errors.length,
        Array.from(store.visible.values()).join(""),
    ].join("|");
    if (key !== lastPanelKey) {
        lastPanelKey = key;
        panel.render();
    }
    requestAnimationFrame(frame);
}
requestAnimationFrame(frame);

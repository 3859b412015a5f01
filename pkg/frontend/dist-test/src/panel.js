/** Session control panel: per-movement recalibration buttons, phase-gated
 * commands, exploration budget readouts, and error toasts. */
import { movementColor } from "./palette.js";
import { allowedCommands } from "./store.js";
export class Panel {
    constructor(root, store, client) {
        this.root = root;
        this.store = store;
        this.client = client;
        this.shownErrors = 0;
    }
    render() {
        const store = this.store;
        const session = store.session;
        const legal = new Set(allowedCommands(store.phase));
        const rows = [];
        rows.push(`<div class="status ${store.connection}">${store.connection.toUpperCase()}` +
            (session ? ` &middot; session ${session.session} &middot; ${session.phase}` : "") +
            `</div>`);
        if (session) {
            rows.push(`<div class="readouts">NR <b id="nr">${session.nr}</b>` +
                ` &middot; NTT <b id="ntt">${session.ntt.toFixed(3)}</b>` +
                ` &middot; budget ${session.t_d_s.toFixed(0)}/${session.t_max_s.toFixed(0)} s` +
                ` &middot; trials ${session.trials_done}/${session.trials_total}</div>`);
        }
        const buttons = [];
        buttons.push(`<button data-cmd="start_calibration" ${legal.has("start_calibration") ? "" : "disabled"}>start calibration</button>`);
        if (session) {
            for (const movement of session.movements) {
                const collected = session.collected.includes(movement);
                const cmd = session.phase === "exploration" ? "recalibrate" : "collect";
                const enabled = (session.phase === "calibration" && legal.has("collect")) ||
                    (session.phase === "exploration" && collected);
                buttons.push(`<button data-cmd="${cmd}" data-movement="${movement}" ${enabled ? "" : "disabled"}` +
                    ` style="border-left: 6px solid ${movementColor(movement)}">` +
                    `${session.phase === "exploration" ? "recalibrate" : "collect"} ${movement}` +
                    `${collected ? " &#10003;" : ""}</button>`);
            }
        }
        buttons.push(`<button data-cmd="end_exploration" ${legal.has("end_exploration") ? "" : "disabled"}>end exploration</button>`);
        buttons.push(`<button data-cmd="start_trial" ${legal.has("start_trial") ? "" : "disabled"}>start trial</button>`);
        rows.push(`<div class="buttons">${buttons.join("")}</div>`);
        if (session && store.clusters) {
            const toggles = session.movements
                .map((m) => `<label style="color:${movementColor(m)}"><input type="checkbox" data-toggle="${m}" ` +
                `${store.isVisible(m) ? "checked" : ""}/>${m}</label>`)
                .join(" ");
            rows.push(`<div class="toggles">${toggles}</div>`);
        }
        const freshErrors = store.errors.slice(this.shownErrors);
        if (freshErrors.length > 0) {
            rows.push(`<div class="toast">${freshErrors[freshErrors.length - 1]}</div>`);
        }
        this.root.innerHTML = rows.join("");
        this.wire();
    }
    wire() {
        for (const el of Array.from(this.root.querySelectorAll("button[data-cmd]"))) {
            el.addEventListener("click", () => {
                const cmd = el.dataset.cmd;
                const movement = el.dataset.movement;
                const payload = {};
                if (movement)
                    payload.movement = movement;
                if (cmd === "start_calibration" && this.store.session === null) {
                    payload.session = 1;
                }
                this.client.send(cmd, payload);
            });
        }
        for (const el of Array.from(this.root.querySelectorAll("input[data-toggle]"))) {
            el.addEventListener("change", () => {
                this.store.toggleClass(el.dataset.toggle);
            });
        }
    }
}

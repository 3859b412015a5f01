/** Transcript-driven store tests: a real recorded session streamed through
 * the client state, checking the display mirrors the server exactly. */
import assert from "node:assert/strict";
import test from "node:test";
import { decodeTranscript } from "../src/protocol.js";
import { Store } from "../src/store.js";
import { backendAvailable, readTranscript, recordSession } from "./helpers.js";
const available = backendAvailable();
let messages = [];
if (available) {
    const recording = recordSession(["--recalibrations", "1"]);
    messages = decodeTranscript(readTranscript(recording.transcript));
}
function playedStore() {
    const store = new Store();
    store.onConnectionOpen(0);
    for (const msg of messages)
        store.apply(msg, 1);
    return store;
}
test("transcript fixture loaded", { skip: !available }, () => {
    assert.ok(messages.length > 100);
});
test("applies every message without drops", { skip: !available }, () => {
    const store = playedStore();
    assert.equal(store.applied, messages.length);
    assert.equal(store.dropped, 0);
});
test("cluster centroids mirror server payload within 1e-6", { skip: !available }, () => {
    const store = playedStore();
    const lastClusters = messages.filter((m) => m.type === "clusters").at(-1);
    assert.ok(store.clusters);
    for (const movement of lastClusters.movements) {
        const shown = store.clusters.centroids[movement];
        const sent = lastClusters.centroids[movement];
        for (let i = 0; i < 3; i++) {
            assert.ok(Math.abs(shown[i] - sent[i]) < 1e-6);
        }
    }
    // rest anchored at the origin of the scene
    const rest = store.clusters.centroids["Rest"];
    assert.deepEqual(rest, [0, 0, 0]);
});
test("cursor updates arrive at the 20 Hz decision cadence", { skip: !available }, () => {
    const store = playedStore();
    const cursorTimes = messages.filter((m) => m.type === "cursor3d").map((m) => m.t);
    assert.ok(cursorTimes.length > 50);
    assert.equal(store.cursorUpdates, cursorTimes.length);
    let contiguous = 0;
    for (let i = 1; i < cursorTimes.length; i++) {
        const dt = cursorTimes[i] - cursorTimes[i - 1];
        if (Math.abs(dt - 0.05) < 1e-9)
            contiguous++;
    }
    // all within-trial deltas are exactly one 50 ms step (gaps occur only
    // between trials); a 20 Hz feed fully applied means a >= 20 Hz display
    assert.ok(contiguous >= cursorTimes.length * 0.9);
});
test("NR readout matches the server after recalibration", { skip: !available }, () => {
    const store = playedStore();
    const states = messages.filter((m) => m.type === "session_state");
    const maxNr = Math.max(...states.map((s) => s.nr));
    assert.equal(maxNr, 1);
    assert.equal(store.nr, 1);
});
test("banner appears exactly at the adjudication message, 10+ trials", { skip: !available }, () => {
    const fltMsgs = messages.filter((m) => m.type === "flt_state");
    const adjudications = new Map();
    for (const msg of fltMsgs) {
        if (msg.outcome !== null && !adjudications.has(msg.trial)) {
            adjudications.set(msg.trial, msg.seq);
        }
    }
    assert.ok(adjudications.size >= 10);
    const store = new Store();
    store.onConnectionOpen(0);
    const bannerAt = new Map();
    for (const msg of messages) {
        const before = store.banner?.trial;
        store.apply(msg, 1);
        const after = store.banner;
        if (after && after.trial !== before) {
            bannerAt.set(after.trial, msg.seq);
        }
    }
    for (const [trial, seq] of adjudications) {
        assert.equal(bannerAt.get(trial), seq);
    }
});
test("dwell progress reaches one second on successful trials", { skip: !available }, () => {
    const fltMsgs = messages.filter((m) => m.type === "flt_state");
    const successes = fltMsgs.filter((m) => m.outcome === "success");
    assert.ok(successes.length >= 10);
    for (const msg of successes) {
        assert.ok(Math.abs(msg.dwell_s - 1.0) < 1e-9);
    }
});
test("reconnect snapshot replaces clusters without duplication", { skip: !available }, () => {
    const store = playedStore();
    const clusters = messages.filter((m) => m.type === "clusters").at(-1);
    const before = Object.fromEntries(Object.entries(store.clusters.points).map(([m, pts]) => [m, pts.length]));
    // snapshot-then-delta on a fresh connection: sequence numbers restart
    store.onConnectionOpen(2);
    store.apply({ ...clusters, seq: 0 }, 2);
    for (const [movement, count] of Object.entries(before)) {
        assert.equal(store.clusters.points[movement].length, count);
    }
});
test("stale feed flips the connection indicator", () => {
    const store = new Store();
    store.onConnectionOpen(1000);
    store.tick(1900);
    assert.equal(store.connection, "live");
    store.tick(2100);
    assert.equal(store.connection, "stale");
});
test("out-of-order sequence numbers are dropped", () => {
    const store = new Store();
    store.onConnectionOpen(0);
    const msg = {
        v: "reviewer/v1",
        seq: 5,
        t: 0,
        type: "error",
        message: "x",
    };
    assert.ok(store.apply(msg, 0));
    assert.ok(!store.apply(msg, 0));
    assert.equal(store.dropped, 1);
});

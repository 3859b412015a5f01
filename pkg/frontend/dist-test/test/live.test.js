/** Round-trip tests against a live backend server over real websockets. */
import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import test from "node:test";
import WebSocket from "ws";
import { GatewayClient } from "../src/client.js";
import { Store } from "../src/store.js";
import { backendAvailable, sleep, startServer } from "./helpers.js";
const available = backendAvailable();
const wsFactory = (url) => new WebSocket(url);
async function waitFor(predicate, label, timeoutMs = 30000) {
    const start = Date.now();
    while (!predicate()) {
        if (Date.now() - start > timeoutMs)
            throw new Error(`timed out waiting for ${label}`);
        await sleep(25);
    }
}
test("live session round trip", { skip: !available, timeout: 120000 }, async () => {
    const server = await startServer();
    const movements = ["Rest", "Hand Open", "Power Grasp", "Wrist Pronate", "Wrist Supinate"];
    try {
        const store = new Store();
        const controller = new GatewayClient(`ws://127.0.0.1:${server.port}`, store, wsFactory);
        controller.connect();
        await waitFor(() => store.connection === "live", "connection");
        controller.send("start_calibration", { session: 1 });
        await waitFor(() => store.phase === "calibration", "calibration phase");
        for (const movement of movements) {
            controller.send("collect", { movement });
        }
        await waitFor(() => store.phase === "exploration", "auto exploration start");
        await waitFor(() => store.clusters !== null, "clusters snapshot");
        // criterion: displayed centroids match the server payload within 1e-6
        const clusters = store.clusters;
        for (const movement of movements) {
            assert.ok(clusters.centroids[movement].every((v) => Number.isFinite(v)));
        }
        assert.deepEqual(clusters.centroids["Rest"], [0, 0, 0]);
        // criterion: cursor stream applies at the full 20 Hz decision cadence
        const before = store.cursorUpdates;
        await sleep(1500);
        const applied = store.cursorUpdates - before;
        assert.ok(applied >= 20, `expected >= 20 cursor updates in 1.5 s, got ${applied}`);
        const trail = store.trail.slice(-Math.min(store.trail.length, applied));
        for (let i = 1; i < trail.length; i++) {
            assert.ok(Math.abs(trail[i].t - trail[i - 1].t - 0.05) < 1e-9);
        }
        // criterion: recalibrate increments displayed NR and logged NR identically
        assert.equal(store.nr, 0);
        controller.send("recalibrate", { movement: "Power Grasp" });
        await waitFor(() => store.nr === 1, "NR increment");
        const logged = readFileSync(server.logPath, "utf-8")
            .trim()
            .split("\n")
            .slice(1)
            .map((line) => JSON.parse(line))
            .filter((event) => event.type === "recalibration").length;
        assert.equal(logged, store.nr);
        // second client is a read-only subscriber: snapshot then rejection
        const watcherStore = new Store();
        const watcher = new GatewayClient(`ws://127.0.0.1:${server.port}`, watcherStore, wsFactory);
        watcher.connect();
        await waitFor(() => watcherStore.clusters !== null, "watcher snapshot");
        assert.equal(watcherStore.session.nr, 1);
        watcher.send("end_exploration");
        await waitFor(() => watcherStore.errors.length > 0, "controller rejection");
        assert.match(watcherStore.errors[0], /controller/);
        // run one trial end to end and confirm the banner mirrors adjudication
        controller.send("end_exploration");
        await waitFor(() => store.phase === "assessment", "assessment phase");
        controller.send("start_trial");
        await waitFor(() => store.banner !== null, "trial adjudication", 60000);
        assert.equal(store.banner.trial, 0);
        assert.ok(["success", "timeout"].includes(store.banner.outcome));
        assert.equal(store.flt.outcome, store.banner.outcome);
        watcher.close();
        controller.close();
    }
    finally {
        server.stop();
    }
});

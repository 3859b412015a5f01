/** Test helpers: drive the real backend CLI to produce fixtures and servers. */
import { spawn, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
export const PYTHON = process.env.MYOLOOP_PYTHON ?? "python3";
export function backendAvailable() {
    const probe = spawnSync(PYTHON, ["-c", "import myoloop"], { encoding: "utf-8" });
    return probe.status === 0;
}
/** Record a full synthetic session through the backend CLI. */
export function recordSession(args = []) {
    const dir = mkdtempSync(join(tmpdir(), "reviewer-ui-"));
    const result = spawnSync(PYTHON, [
        "-m",
        "myoloop.gateway.cli",
        "record",
        "--session",
        "1",
        "--seed",
        "7",
        "--out-dir",
        dir,
        ...args,
    ], { encoding: "utf-8", timeout: 120000 });
    if (result.status !== 0) {
        throw new Error(`record failed: ${result.stdout}\n${result.stderr}`);
    }
    return {
        dir,
        emg: join(dir, "session.emg"),
        script: join(dir, "script.json"),
        log: join(dir, "session.log"),
        transcript: join(dir, "transcript.bin"),
    };
}
export function readTranscript(path) {
    return readFileSync(path, "utf-8");
}
/** Start `serve` on a free port; resolves once the bound port is printed. */
export function startServer(extra = []) {
    const dir = mkdtempSync(join(tmpdir(), "reviewer-srv-"));
    const logPath = join(dir, "session.log");
    const proc = spawn(PYTHON, [
        "-m",
        "myoloop.gateway.cli",
        "serve",
        "--port",
        "0",
        "--session",
        "1",
        "--seed",
        "7",
        "--log",
        logPath,
        ...extra,
    ], { stdio: ["ignore", "pipe", "pipe"] });
    return new Promise((resolve, reject) => {
        let buffer = "";
        const timer = setTimeout(() => reject(new Error(`server did not start: ${buffer}`)), 20000);
        proc.stdout.on("data", (chunk) => {
            buffer += chunk.toString();
            const match = buffer.match(/listening on ws:\/\/[^:]+:(\d+)/);
            if (match) {
                clearTimeout(timer);
                resolve({
                    port: Number(match[1]),
                    logPath,
                    proc,
                    stop: () => proc.kill("SIGTERM"),
                });
            }
        });
        proc.on("exit", (code) => {
            clearTimeout(timer);
            reject(new Error(`server exited early (${code}): ${buffer}`));
        });
    });
}
export function sleep(ms) {
    return new Promise((resolve) => setTimeout(resolve, ms));
}

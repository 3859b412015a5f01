/** Client state: applies server messages in sequence order and exposes the
 * view model. All values originate server-side; the store never recomputes
 * classification or metrics, it only mirrors payloads. */
const STALE_AFTER_MS = 1000;
const TRAIL_LENGTH = 64;
export class Store {
    constructor() {
        this.connection = "connecting";
        this.session = null;
        this.clusters = null;
        this.cursor = null;
        this.trail = [];
        this.lastDecision = null;
        this.flt = null;
        this.banner = null;
        this.errors = [];
        this.visible = new Map();
        this.applied = 0;
        this.dropped = 0;
        this.cursorUpdates = 0;
        this.lastSeq = -1;
        this.lastMessageWallMs = 0;
    }
    /** Reset per-connection bookkeeping (sequence numbers restart). */
    onConnectionOpen(nowMs) {
        this.connection = "live";
        this.lastSeq = -1;
        this.lastMessageWallMs = nowMs;
    }
    onConnectionClosed() {
        this.connection = "closed";
    }
    /** Mark the feed stale when nothing has arrived for over a second. */
    tick(nowMs) {
        if (this.connection === "live" && nowMs - this.lastMessageWallMs > STALE_AFTER_MS) {
            this.connection = "stale";
        }
    }
    apply(msg, nowMs = 0) {
        if (msg.seq <= this.lastSeq) {
            this.dropped += 1;
            return false;
        }
        this.lastSeq = msg.seq;
        this.lastMessageWallMs = nowMs;
        if (this.connection !== "live")
            this.connection = "live";
        this.applied += 1;
        switch (msg.type) {
            case "session_state":
                this.session = msg;
                for (const movement of msg.movements) {
                    if (!this.visible.has(movement))
                        this.visible.set(movement, true);
                }
                break;
            case "clusters":
                // full snapshot: replace wholesale so reconnects never duplicate
                this.clusters = msg;
                break;
            case "cursor3d":
                this.cursor = { p: msg.p, label: msg.label, t: msg.t };
                this.trail.push(this.cursor);
                if (this.trail.length > TRAIL_LENGTH)
                    this.trail.shift();
                this.cursorUpdates += 1;
                break;
            case "decision":
                this.lastDecision = msg;
                break;
            case "flt_state":
                this.flt = msg;
                if (msg.outcome !== null) {
                    if (this.banner === null || this.banner.trial !== msg.trial) {
                        this.banner = { trial: msg.trial, outcome: msg.outcome, atSeq: msg.seq };
                    }
                }
                else if (this.banner !== null && this.banner.trial !== msg.trial) {
                    this.banner = null; // a new trial started
                }
                break;
            case "error":
                this.errors.push(msg.message);
                if (this.errors.length > 20)
                    this.errors.shift();
                break;
        }
        return true;
    }
    toggleClass(movement) {
        this.visible.set(movement, !(this.visible.get(movement) ?? true));
    }
    isVisible(movement) {
        return this.visible.get(movement) ?? true;
    }
    get phase() {
        return this.session?.phase ?? null;
    }
    get nr() {
        return this.session?.nr ?? 0;
    }
    get ntt() {
        return this.session?.ntt ?? 0;
    }
}
/** Controller commands legal in each protocol phase (mirrors the server's
 * state machine; the server remains the authority). */
export function allowedCommands(phase) {
    switch (phase) {
        case null:
            return ["start_calibration"];
        case "calibration":
            return ["collect"];
        case "exploration":
            return ["collect", "recalibrate", "end_exploration"];
        case "assessment":
            return ["start_trial"];
        default:
            return [];
    }
}

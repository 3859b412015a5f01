/** Client state: applies server messages in sequence order and exposes the
 * view model. All values originate server-side; the store never recomputes
 * classification or metrics, it only mirrors payloads. */

import type {
  ClustersMsg,
  DecisionMsg,
  FltStateMsg,
  ServerMessage,
  SessionStateMsg,
} from "./types.js";

export type ConnectionState = "connecting" | "live" | "stale" | "closed";

export interface Banner {
  trial: number;
  outcome: "success" | "timeout";
  atSeq: number;
}

export interface CursorSample {
  p: [number, number, number];
  label: string;
  t: number;
}

const STALE_AFTER_MS = 1000;
const TRAIL_LENGTH = 64;

export class Store {
  connection: ConnectionState = "connecting";
  session: SessionStateMsg | null = null;
  clusters: ClustersMsg | null = null;
  cursor: CursorSample | null = null;
  trail: CursorSample[] = [];
  lastDecision: DecisionMsg | null = null;
  flt: FltStateMsg | null = null;
  banner: Banner | null = null;
  errors: string[] = [];
  visible = new Map<string, boolean>();

  applied = 0;
  dropped = 0;
  cursorUpdates = 0;
  private lastSeq = -1;
  private lastMessageWallMs = 0;

  /** Reset per-connection bookkeeping (sequence numbers restart). */
  onConnectionOpen(nowMs: number): void {
    this.connection = "live";
    this.lastSeq = -1;
    this.lastMessageWallMs = nowMs;
  }

  onConnectionClosed(): void {
    this.connection = "closed";
  }

  /** Mark the feed stale when nothing has arrived for over a second. */
  tick(nowMs: number): void {
    if (this.connection === "live" && nowMs - this.lastMessageWallMs > STALE_AFTER_MS) {
      this.connection = "stale";
    }
  }

  apply(msg: ServerMessage, nowMs = 0): boolean {
    if (msg.seq <= this.lastSeq) {
      this.dropped += 1;
      return false;
    }
    this.lastSeq = msg.seq;
    this.lastMessageWallMs = nowMs;
    if (this.connection !== "live") this.connection = "live";
    this.applied += 1;

    switch (msg.type) {
      case "session_state":
        this.session = msg;
        for (const movement of msg.movements) {
          if (!this.visible.has(movement)) this.visible.set(movement, true);
        }
        break;
      case "clusters":
        // full snapshot: replace wholesale so reconnects never duplicate
        this.clusters = msg;
        break;
      case "cursor3d":
        this.cursor = { p: msg.p, label: msg.label, t: msg.t };
        this.trail.push(this.cursor);
        if (this.trail.length > TRAIL_LENGTH) this.trail.shift();
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
        } else if (this.banner !== null && this.banner.trial !== msg.trial) {
          this.banner = null; // a new trial started
        }
        break;
      case "error":
        this.errors.push(msg.message);
        if (this.errors.length > 20) this.errors.shift();
        break;
    }
    return true;
  }

  toggleClass(movement: string): void {
    this.visible.set(movement, !(this.visible.get(movement) ?? true));
  }

  isVisible(movement: string): boolean {
    return this.visible.get(movement) ?? true;
  }

  get phase(): string | null {
    return this.session?.phase ?? null;
  }

  get nr(): number {
    return this.session?.nr ?? 0;
  }

  get ntt(): number {
    return this.session?.ntt ?? 0;
  }
}

/** Controller commands legal in each protocol phase (mirrors the server's
 * state machine; the server remains the authority). */
export function allowedCommands(phase: string | null): string[] {
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

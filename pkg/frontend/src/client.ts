/** WebSocket client: subscribes on connect, feeds frames to the store, and
 * reconnects with backoff. Commands are fire-and-forget; the server answers
 * with state broadcasts or error messages. */

import { decodeFrame, encodeCommand, ProtocolError } from "./protocol.js";
import { Store } from "./store.js";
import type { CommandType } from "./types.js";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
  readyState: number;
}

export type WsFactory = (url: string) => WebSocketLike;

const OPEN = 1;

export class GatewayClient {
  private ws: WebSocketLike | null = null;
  private seq = 0;
  private attempts = 0;
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private store: Store,
    private factory: WsFactory = (u) => new WebSocket(u) as unknown as WebSocketLike,
    private now: () => number = () => Date.now(),
  ) {}

  connect(): void {
    this.closed = false;
    const ws = this.factory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.attempts = 0;
      this.store.onConnectionOpen(this.now());
      ws.send(encodeCommand("subscribe", this.nextSeq()));
    };
    ws.onmessage = (ev) => {
      try {
        this.store.apply(decodeFrame(String(ev.data)), this.now());
      } catch (err) {
        if (!(err instanceof ProtocolError)) throw err;
        this.store.errors.push(err.message);
      }
    };
    ws.onclose = () => {
      this.store.onConnectionClosed();
      this.scheduleReconnect();
    };
    ws.onerror = () => {
      /* onclose follows */
    };
  }

  private scheduleReconnect(): void {
    if (this.closed || this.reconnectTimer !== null) return;
    const delay = Math.min(500 * 2 ** this.attempts, 10000);
    this.attempts += 1;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, delay);
  }

  send(type: CommandType, payload: Record<string, unknown> = {}): boolean {
    if (!this.ws || this.ws.readyState !== OPEN) return false;
    this.ws.send(encodeCommand(type, this.nextSeq(), payload));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.ws?.close();
  }

  private nextSeq(): number {
    return this.seq++;
  }
}

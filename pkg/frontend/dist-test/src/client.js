/** WebSocket client: subscribes on connect, feeds frames to the store, and
 * reconnects with backoff. Commands are fire-and-forget; the server answers
 * with state broadcasts or error messages. */
import { decodeFrame, encodeCommand, ProtocolError } from "./protocol.js";
const OPEN = 1;
export class GatewayClient {
    constructor(url, store, factory = (u) => new WebSocket(u), now = () => Date.now()) {
        this.url = url;
        this.store = store;
        this.factory = factory;
        this.now = now;
        this.ws = null;
        this.seq = 0;
        this.attempts = 0;
        this.closed = false;
        this.reconnectTimer = null;
    }
    connect() {
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
            }
            catch (err) {
                if (!(err instanceof ProtocolError))
                    throw err;
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
    scheduleReconnect() {
        if (this.closed || this.reconnectTimer !== null)
            return;
        const delay = Math.min(500 * 2 ** this.attempts, 10000);
        this.attempts += 1;
        this.reconnectTimer = setTimeout(() => {
            this.reconnectTimer = null;
            this.connect();
        }, delay);
    }
    send(type, payload = {}) {
        if (!this.ws || this.ws.readyState !== OPEN)
            return false;
        this.ws.send(encodeCommand(type, this.nextSeq(), payload));
        return true;
    }
    close() {
        this.closed = true;
        if (this.reconnectTimer !== null)
            clearTimeout(this.reconnectTimer);
        this.ws?.close();
    }
    nextSeq() {
        return this.seq++;
    }
}

/** Length-delimited reviewer/v1 framing: "<byte-length> <json>\n". */

import type { CommandType, ServerMessage } from "./types.js";

export const PROTOCOL_VERSION = "reviewer/v1";

const encoder = new TextEncoder();

export class ProtocolError extends Error {}

export function decodeFrame(frame: string): ServerMessage {
  const space = frame.indexOf(" ");
  if (space < 0) throw new ProtocolError("missing length prefix");
  const declared = Number(frame.slice(0, space));
  const body = frame.endsWith("\n") ? frame.slice(space + 1, -1) : frame.slice(space + 1);
  const actual = encoder.encode(body).length;
  if (!Number.isInteger(declared) || declared !== actual) {
    throw new ProtocolError(`length prefix ${declared} does not match body of ${actual} bytes`);
  }
  let msg: unknown;
  try {
    msg = JSON.parse(body);
  } catch (err) {
    throw new ProtocolError(`undecodable message body: ${String(err)}`);
  }
  const m = msg as Record<string, unknown>;
  if (m === null || typeof m !== "object") throw new ProtocolError("message must be an object");
  if (m.v !== PROTOCOL_VERSION) throw new ProtocolError(`unsupported version ${String(m.v)}`);
  if (typeof m.type !== "string") throw new ProtocolError("message missing type");
  if (typeof m.seq !== "number") throw new ProtocolError("message missing sequence number");
  return m as unknown as ServerMessage;
}

export function encodeFrame(msg: Record<string, unknown>): string {
  const body = JSON.stringify(msg);
  return `${encoder.encode(body).length} ${body}\n`;
}

export function encodeCommand(
  type: CommandType,
  seq: number,
  payload: Record<string, unknown> = {},
): string {
  return encodeFrame({ v: PROTOCOL_VERSION, seq, t: 0, type, ...payload });
}

/** Split a transcript blob (concatenated frames) into messages. */
export function decodeTranscript(blob: string): ServerMessage[] {
  const out: ServerMessage[] = [];
  let pos = 0;
  while (pos < blob.length) {
    const space = blob.indexOf(" ", pos);
    if (space < 0) break;
    const length = Number(blob.slice(pos, space));
    // length counts bytes; the transcript is ASCII-safe JSON so bytes == chars
    const end = space + 1 + length;
    out.push(decodeFrame(blob.slice(pos, end + 1)));
    pos = end + 1;
  }
  return out;
}

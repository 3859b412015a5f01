import assert from "node:assert/strict";
import test from "node:test";

import { decodeFrame, decodeTranscript, encodeCommand, encodeFrame, ProtocolError } from "../src/protocol.js";

test("frame round trip", () => {
  const frame = encodeFrame({ v: "reviewer/v1", seq: 3, t: 0.15, type: "decision", label: "Rest" });
  const msg = decodeFrame(frame);
  assert.equal(msg.type, "decision");
  assert.equal(msg.seq, 3);
});

test("length prefix counts utf-8 bytes", () => {
  const frame = encodeFrame({ v: "reviewer/v1", seq: 0, t: 0, type: "error", message: "café" });
  const declared = Number(frame.split(" ", 1)[0]);
  const body = frame.slice(frame.indexOf(" ") + 1, -1);
  assert.equal(declared, new TextEncoder().encode(body).length);
  assert.equal(decodeFrame(frame).type, "error");
});

test("rejects wrong version", () => {
  const frame = encodeFrame({ v: "reviewer/v2", seq: 0, t: 0, type: "decision" });
  assert.throws(() => decodeFrame(frame), ProtocolError);
});

test("rejects corrupted length", () => {
  assert.throws(() => decodeFrame('999 {"v":"reviewer/v1","seq":0,"type":"error"}\n'), ProtocolError);
});

test("rejects missing seq", () => {
  const frame = encodeFrame({ v: "reviewer/v1", t: 0, type: "decision" });
  assert.throws(() => decodeFrame(frame), ProtocolError);
});

test("command encoding is server-decodable shape", () => {
  const frame = encodeCommand("recalibrate", 5, { movement: "Power Grasp" });
  const msg = decodeFrame(frame) as unknown as Record<string, unknown>;
  assert.equal(msg.type, "recalibrate");
  assert.equal(msg.movement, "Power Grasp");
});

test("transcript splitting", () => {
  const frames =
    encodeFrame({ v: "reviewer/v1", seq: 0, t: 0, type: "session_state" }) +
    encodeFrame({ v: "reviewer/v1", seq: 1, t: 0.05, type: "cursor3d", p: [0, 0, 0] });
  const msgs = decodeTranscript(frames);
  assert.equal(msgs.length, 2);
  assert.deepEqual(
    msgs.map((m) => m.type),
    ["session_state", "cursor3d"],
  );
});

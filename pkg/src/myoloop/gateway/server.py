"""Websocket fan-out around the deterministic engine.

One engine, one optional controller, any number of read-only subscribers.
Broadcasts run at the decision cadence (20 Hz) when pacing is on; each
connection gets its own gap-free sequence numbers. A subscriber joining
mid-session first receives a session_state plus clusters snapshot, then the
live delta stream.
"""
from __future__ import annotations

import asyncio
import logging

import websockets

from ..errors import MessageError
from .engine import EndOfStream, Engine
from .protocol import decode_message, encode_message, make_message

logger = logging.getLogger(__name__)


class _Connection:
    def __init__(self, ws):
        self.ws = ws
        self.seq = 0

    async def send(self, msg: dict) -> None:
        resequenced = dict(msg)
        resequenced["seq"] = self.seq
        self.seq += 1
        await self.ws.send(encode_message(resequenced).decode("utf-8"))


class GatewayServer:
    """Serve one engine over websockets."""

    def __init__(
        self,
        engine: Engine,
        pace: bool = True,
        step_s: float = 0.05,
        log_path: str | None = None,
    ):
        self.engine = engine
        self.pace = pace
        self.step_s = step_s
        self.log_path = log_path
        self.subscribers: dict[object, _Connection] = {}
        self.controller: object | None = None
        self._lock = asyncio.Lock()
        self._stopped = asyncio.Event()

    def _mirror_log(self) -> None:
        if self.log_path is not None and self.engine.session is not None:
            self.engine.write_outputs(log_path=self.log_path)

    async def handler(self, ws) -> None:
        conn = _Connection(ws)
        self.subscribers[ws] = conn
        try:
            async with self._lock:
                for msg in self.engine.snapshot_messages():
                    await conn.send(msg)
            async for raw in ws:
                try:
                    cmd = decode_message(raw)
                except MessageError as exc:
                    await conn.send(self._error(str(exc)))
                    continue
                if cmd["type"] == "subscribe":
                    continue
                if self.controller is not None and self.controller is not ws:
                    await conn.send(self._error("another controller is connected"))
                    continue
                self.controller = ws
                async with self._lock:
                    self.engine.handle_command(cmd)
                    self._mirror_log()
                    await self._broadcast()
        except websockets.ConnectionClosed:
            pass
        finally:
            self.subscribers.pop(ws, None)
            if self.controller is ws:
                self.controller = None

    def _error(self, message: str) -> dict:
        return make_message("error", seq=0, t=self.engine.time_s, message=message)

    async def _broadcast(self) -> None:
        msgs = self.engine.drain()
        if not msgs:
            return
        stale = []
        for ws, conn in self.subscribers.items():
            try:
                for msg in msgs:
                    await conn.send(msg)
            except websockets.ConnectionClosed:
                stale.append(ws)
        for ws in stale:
            self.subscribers.pop(ws, None)

    async def pump(self) -> None:
        """Advance the engine at the decision cadence and fan out messages."""
        while not self._stopped.is_set():
            async with self._lock:
                try:
                    produced = self.engine.step()
                except EndOfStream:
                    logger.info("signal source exhausted; pump idle")
                    self._stopped.set()
                    break
                if any(m["type"] == "session_state" for m in produced):
                    self._mirror_log()
                await self._broadcast()
            if self.pace:
                await asyncio.sleep(self.step_s)
            else:
                await asyncio.sleep(0)

    def stop(self) -> None:
        self._stopped.set()


async def serve(engine: Engine, host: str = "127.0.0.1", port: int = 8765, pace: bool = True):
    """Run the gateway until cancelled."""
    server = GatewayServer(engine, pace=pace)
    async with websockets.serve(server.handler, host, port):
        logger.info("gateway listening on ws://%s:%d", host, port)
        await server.pump()

"""Streaming gateway: wire protocol, deterministic pipeline engine, websocket
server, and the command-line interface."""

"""WebSocket telemetry and command service (protocol in docs/protocol.md).

Server -> client: one `hello` on connect, then `snapshot` messages at the
control rate. Client -> server: `set_glove_q`, `set_config`, `scenario`.
Malformed or invalid messages get `{"type": "error", "reason": ...}` replies
and never reach the control thread.

The service runs an asyncio event loop on its own thread. Snapshots are
broadcast via per-client queues; a client that falls a full queue behind is
disconnected rather than allowed to stall anyone else.
"""

from __future__ import annotations

import asyncio
import json
import math
import threading

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .daemon import BUNDLED_SCENARIOS, ControlLoop

CLIENT_QUEUE_LIMIT = 512


class BindError(Exception):
    pass


def validate_command(message: dict, loop: ControlLoop) -> str | None:
    """Returns an error reason, or None if the command may be queued."""
    if not isinstance(message, dict):
        return "message must be a JSON object"
    kind = message.get("type")
    if kind == "set_glove_q":
        q = message.get("q")
        dof = loop.glove_model.dof_count
        if not isinstance(q, list) or len(q) != dof:
            return f"dimension mismatch: q must have {dof} entries"
        if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in q):
            return "q entries must be finite numbers"
        return None
    if kind == "set_config":
        updates = {k: v for k, v in message.items() if k != "type"}
        allowed = {"scale", "thresholds", "kp_max", "hysteresis_g"}
        unknown = set(updates) - allowed
        if unknown:
            return f"unknown config keys: {sorted(unknown)}"
        if not updates:
            return "set_config carries no settings"
        try:
            loop.config.with_updates(updates)
        except (TypeError, ValueError, IndexError, KeyError) as exc:
            return f"invalid config value: {exc}"
        return None
    if kind == "scenario":
        if message.get("name") not in BUNDLED_SCENARIOS:
            return f"unknown scenario; expected one of {list(BUNDLED_SCENARIOS)}"
        return None
    return f"unknown message type {kind!r}"


class TelemetryServer:
    """Fan-out of control-loop snapshots plus command ingress over WebSocket."""

    def __init__(self, loop: ControlLoop, host: str = "127.0.0.1", port: int = 8765):
        self.control = loop
        self.host = host
        self.port = port
        self._clients: dict[asyncio.Queue, object] = {}
        self._aio: asyncio.AbstractEventLoop | None = None
        self._stop: asyncio.Future | None = None
        self._thread: threading.Thread | None = None
        self._ready = threading.Event()
        self._error: BaseException | None = None

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, name="telemetry-server", daemon=True)
        self._thread.start()
        self._ready.wait(timeout=10.0)
        if self._error is not None:
            raise BindError(f"cannot serve on {self.host}:{self.port}: {self._error}")
        if not self._ready.is_set():
            raise BindError("server did not start in time")

    def _run(self) -> None:
        try:
            asyncio.run(self._main())
        except BaseException as exc:  # surfaced via start()
            self._error = exc
            self._ready.set()

    async def _main(self) -> None:
        self._aio = asyncio.get_running_loop()
        self._stop = self._aio.create_future()
        try:
            async with ws_serve(self._handler, self.host, self.port):
                self._ready.set()
                await self._stop
        except OSError as exc:
            self._error = exc
            self._ready.set()

    def stop(self) -> None:
        if self._aio is not None and self._stop is not None and not self._stop.done():
            self._aio.call_soon_threadsafe(self._stop.set_result, None)
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    # -- control-thread side ---------------------------------------------------

    def broadcast(self, snapshot) -> None:
        """Called by the control loop for every tick; never blocks on clients."""
        if self._aio is None:
            return
        text = json.dumps(snapshot.to_message())
        self._aio.call_soon_threadsafe(self._fanout, text)

    def _fanout(self, text: str) -> None:
        for q, ws in list(self._clients.items()):
            try:
                q.put_nowait(text)
            except asyncio.QueueFull:
                # a stalled client gets disconnected instead of slowing others
                self._clients.pop(q, None)
                asyncio.ensure_future(ws.close())

    # -- per-connection ----------------------------------------------------------

    async def _handler(self, ws) -> None:
        hello = {
            "type": "hello",
            "glove_dof": self.control.glove_model.dof_count,
            "robot_dof": self.control.robot_model.dof_count,
            "fingers": list(self.control.glove_model.fingertip_frames),
            "config_hash": self.control.config.config_hash(),
            "scenario": self.control.scenario_name,
            "control_rate": self.control.config.loop.control_rate,
        }
        await ws.send(json.dumps(hello))
        outbox: asyncio.Queue = asyncio.Queue(maxsize=CLIENT_QUEUE_LIMIT)
        self._clients[outbox] = ws
        sender = asyncio.create_task(self._pump(ws, outbox))
        try:
            async for raw in ws:
                reply = self._on_message(raw)
                if reply is not None:
                    await ws.send(json.dumps(reply))
        except ConnectionClosed:
            pass
        finally:
            self._clients.pop(outbox, None)
            sender.cancel()

    async def _pump(self, ws, outbox: asyncio.Queue) -> None:
        try:
            while True:
                await ws.send(await outbox.get())
        except (ConnectionClosed, asyncio.CancelledError):
            pass

    def _on_message(self, raw) -> dict | None:
        try:
            message = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError):
            return {"type": "error", "reason": "malformed JSON"}
        reason = validate_command(message if isinstance(message, dict) else None, self.control)
        if reason is not None:
            return {"type": "error", "reason": reason}
        self.control.submit(message)
        return None

import asyncio
import json
import math
import socket
import threading
from dataclasses import replace

import numpy as np
import pytest
from websockets.asyncio.client import connect

from dexlink.config import AppConfig, LoopConfig
from dexlink.daemon import build_interactive_loop
from dexlink.server import BindError, TelemetryServer


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture
def live_daemon():
    config = AppConfig(
        loop=LoopConfig(clock="wall", duration_s=math.inf, scenario="grasp_bottle"),
        serve_port=free_port(),
    )
    loop = build_interactive_loop(config)
    server = TelemetryServer(loop, host="127.0.0.1", port=config.serve_port)
    loop.on_snapshot = server.broadcast
    server.start()
    stop = threading.Event()
    thread = threading.Thread(target=loop.run_wall_clock, args=(stop, math.inf), daemon=True)
    thread.start()
    try:
        yield f"ws://127.0.0.1:{config.serve_port}", loop
    finally:
        stop.set()
        thread.join(timeout=5.0)
        server.stop()


async def recv_json(ws, timeout=5.0):
    return json.loads(await asyncio.wait_for(ws.recv(), timeout))


async def next_snapshot(ws, timeout=5.0, predicate=None):
    deadline = asyncio.get_event_loop().time() + timeout
    while True:
        remaining = deadline - asyncio.get_event_loop().time()
        msg = json.loads(await asyncio.wait_for(ws.recv(), max(0.01, remaining)))
        if msg.get("type") == "snapshot" and (predicate is None or predicate(msg)):
            return msg


def test_hello_then_snapshots_flow(live_daemon):
    url, loop = live_daemon

    async def scenario():
        async with connect(url) as ws:
            hello = await recv_json(ws)
            assert hello["type"] == "hello"
            assert hello["glove_dof"] == 21
            assert hello["robot_dof"] == 16
            assert set(hello["fingers"]) == {"thumb", "index", "middle", "ring", "pinky"}
            snap = await next_snapshot(ws)
            assert len(snap["glove_q"]) == 21
            assert len(snap["robot_q"]) == 16
            assert len(snap["forces"]) == 5
            assert len(snap["feedback"]) == 5
            assert all(len(pts) >= 2 for pts in snap["glove_points"].values())

    asyncio.run(scenario())


def test_set_glove_q_echoes_into_snapshots(live_daemon):
    url, loop = live_daemon
    target = [0.0] * 21
    target[7] = 0.4  # index_mcp_s slot in document order

    async def scenario():
        async with connect(url) as ws:
            await recv_json(ws)  # hello
            await ws.send(json.dumps({"type": "set_glove_q", "q": target}))
            snap = await next_snapshot(ws, predicate=lambda m: abs(m["glove_q"][7] - 0.4) < 0.01)
            assert snap is not None

    asyncio.run(scenario())


def test_dimension_mismatch_rejected_and_state_unchanged(live_daemon):
    url, loop = live_daemon

    async def scenario():
        async with connect(url) as ws:
            await recv_json(ws)
            before = await next_snapshot(ws)
            await ws.send(json.dumps({"type": "set_glove_q", "q": [0.5] * 20}))
            replies = []
            for _ in range(20):
                msg = await recv_json(ws)
                if msg["type"] == "error":
                    replies.append(msg)
                    break
            assert replies and "dimension mismatch" in replies[0]["reason"]
            after = await next_snapshot(ws)
            assert np.allclose(after["glove_q"], before["glove_q"], atol=1e-9)

    asyncio.run(scenario())


def test_malformed_messages_never_kill_the_loop(live_daemon):
    url, loop = live_daemon
    garbage = [
        "not json at all",
        json.dumps(["array", "not", "object"]),
        json.dumps({"type": "launch_missiles"}),
        json.dumps({"type": "set_config", "scale": "wide"}),
        json.dumps({"type": "set_config", "warp": 9}),
        json.dumps({"type": "scenario", "name": "warehouse"}),
        json.dumps({"type": "set_glove_q", "q": "all of them"}),
        json.dumps({"type": "set_glove_q", "q": [float("nan")] * 21}) .replace("NaN", "1e999"),
    ]

    async def scenario():
        async with connect(url) as ws:
            await recv_json(ws)
            errors = 0
            for msg in garbage:
                await ws.send(msg)
            deadline = asyncio.get_event_loop().time() + 5.0
            while errors < len(garbage) and asyncio.get_event_loop().time() < deadline:
                reply = await recv_json(ws)
                if reply["type"] == "error":
                    errors += 1
            assert errors == len(garbage)
            # loop still alive and snapshotting
            assert await next_snapshot(ws) is not None

    asyncio.run(scenario())


def test_two_clients_receive_identical_sequences(live_daemon):
    url, loop = live_daemon

    async def scenario():
        async with connect(url) as a, connect(url) as b:
            await recv_json(a)
            await recv_json(b)
            seq_a, seq_b = {}, {}
            for _ in range(15):
                snap = await next_snapshot(a)
                seq_a[snap["tick"]] = json.dumps(snap, sort_keys=True)
            for _ in range(15):
                snap = await next_snapshot(b)
                seq_b[snap["tick"]] = json.dumps(snap, sort_keys=True)
            shared = set(seq_a) & set(seq_b)
            assert len(shared) >= 5
            for tick in shared:
                assert seq_a[tick] == seq_b[tick]

    asyncio.run(scenario())


def test_set_config_changes_hash(live_daemon):
    url, loop = live_daemon

    async def scenario():
        async with connect(url) as ws:
            hello = await recv_json(ws)
            await ws.send(json.dumps({"type": "set_config", "scale": 1.9}))
            snap = await next_snapshot(ws, predicate=lambda m: m["config_hash"] != hello["config_hash"])
            assert snap is not None

    asyncio.run(scenario())


def test_bind_error_on_taken_port(live_daemon):
    url, loop = live_daemon
    port = int(url.rsplit(":", 1)[1])
    other = TelemetryServer(loop, host="127.0.0.1", port=port)
    with pytest.raises(BindError):
        other.start()

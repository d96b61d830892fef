"""Real-time orchestrator: sensing ingestion at the MoCap rate, a >=30 Hz
retarget/feedback control tick, demonstration recording, and snapshot fan-out.

One control thread owns retarget state, the simulator, and the per-finger
feedback engines. Sensor frames arrive through the binary wire codec either
pulled synchronously (simulated clock: fully deterministic, exact tick times
k / control_rate) or pushed by a producer thread into a newest-wins slot
(wall clock). Snapshots are immutable values handed to an observer callback;
nothing on the control path blocks on the network.
"""

from __future__ import annotations

import math
import queue
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import bundled_model_text, bundled_scenario_text
from .config import AppConfig
from .feedback import FeedbackEngine, ForceReading, make_engines
from .glove import (
    GloveChannelMap,
    GloveJointState,
    ServoState,
    SimulatedGlove,
    SourceDisconnected,
    assemble_glove_state,
    default_zero_offsets,
    identity_tables,
    tables_from_json,
)
from .kinematics import FINGERS, HandModel, link_poses, load_hand_model, load_hand_model_file
from .recording import DemoRecord, DemoWriter
from .retarget import retarget_step
from .sim import SimState, contact_forces, scenario_load, step
from .transforms import rpy_to_matrix
from .wire import FrameDecoder, encode_frame

BUNDLED_SCENARIOS = ("grasp_bottle", "press_box", "pinch_small")


class DaemonError(Exception):
    pass


def scenario_text(name_or_path: str) -> str:
    """Bundled scenario by name, or any scenario document by path."""
    if name_or_path in BUNDLED_SCENARIOS:
        return bundled_scenario_text(name_or_path)
    with open(name_or_path, "r", encoding="utf-8") as fh:
        return fh.read()


# ---------------------------------------------------------------------------
# wrist pose sources (stand-in for an external tracker)
# ---------------------------------------------------------------------------


class ConstantPoseSource:
    def __init__(self, rot=None, pos=None):
        self.rot = np.eye(3) if rot is None else np.asarray(rot, dtype=float)
        self.pos = np.zeros(3) if pos is None else np.asarray(pos, dtype=float)

    def pose(self, t: float):
        return self.rot, self.pos


class ScriptedPoseSource:
    """CSV trajectory with columns t, x, y, z, roll, pitch, yaw."""

    def __init__(self, times, rows):
        self.times = np.asarray(times, dtype=float)
        self.rows = np.asarray(rows, dtype=float)

    @classmethod
    def load(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        data = np.atleast_2d(data)
        return cls(data[:, 0], data[:, 1:7])

    def pose(self, t: float):
        i = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 1))
        if i + 1 < len(self.times) and self.times[i + 1] > self.times[i]:
            w = np.clip((t - self.times[i]) / (self.times[i + 1] - self.times[i]), 0.0, 1.0)
            row = (1 - w) * self.rows[i] + w * self.rows[i + 1]
        else:
            row = self.rows[i]
        return rpy_to_matrix(row[3:6]), row[:3].copy()


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Snapshot:
    t: float
    glove_q: np.ndarray
    robot_q: np.ndarray
    forces: tuple[float, ...]
    feedback: tuple[str, ...]
    residuals: tuple[float, ...]
    glove_points: dict[str, list]
    robot_points: dict[str, list]
    config_hash: str
    scenario: str
    tick: int

    def to_message(self) -> dict:
        return {
            "type": "snapshot",
            "t": self.t,
            "tick": self.tick,
            "glove_q": self.glove_q.tolist(),
            "robot_q": self.robot_q.tolist(),
            "forces": list(self.forces),
            "feedback": list(self.feedback),
            "residuals": list(self.residuals),
            "glove_points": self.glove_points,
            "robot_points": self.robot_points,
            "config_hash": self.config_hash,
            "scenario": self.scenario,
        }


def _finger_polylines(model: HandModel, q) -> dict[str, list]:
    rots, poss = link_poses(model, q)
    out = {}
    for finger, frame in model.fingertip_frames.items():
        pts = [poss[0]]
        pts.extend(poss[j + 1] for j in model.finger_chain(finger))
        pts.append(poss[frame.link] + rots[frame.link] @ frame.offset_xyz)
        out[finger] = [[round(float(c), 5) for c in p] for p in pts]
    return out


# ---------------------------------------------------------------------------
# newest-wins slot for wall-clock sensing
# ---------------------------------------------------------------------------


class LatestSlot:
    def __init__(self):
        self._lock = threading.Lock()
        self._item = None

    def put(self, item) -> None:
        with self._lock:
            self._item = item

    def take(self):
        with self._lock:
            item, self._item = self._item, None
            return item


# ---------------------------------------------------------------------------
# control loop
# ---------------------------------------------------------------------------


class ControlLoop:
    """Owns one teleop session: sensing decode, retarget, sim, feedback, log."""

    def __init__(
        self,
        config: AppConfig,
        glove: SimulatedGlove,
        wrist_source=None,
        record_path=None,
        on_snapshot=None,
    ):
        self.config = config
        self.glove = glove
        self.glove_model = glove.model
        self.robot_model = load_robot_model(config)
        self.wrist_source = wrist_source or ConstantPoseSource()
        self.on_snapshot = on_snapshot
        self.commands: queue.SimpleQueue = queue.SimpleQueue()

        self.tables = load_tables(config)
        self.zero_offsets = load_zero_offsets(config, self.glove_model)
        self.channel_map = glove.channel_map

        self.scenario_name = config.loop.scenario
        self.sim_state = scenario_load(scenario_text(self.scenario_name), self.robot_model)
        self.engines = make_engines(config.feedback)
        self.q_prev = self.sim_state.q_actual.copy()

        self.decoder = FrameDecoder()
        self.latest_state: GloveJointState | None = None
        self.latest_servos: ServoState | None = None
        self._t_sensed = 0.0

        self.recorder = None
        if record_path is not None:
            self.recorder = DemoWriter(
                record_path,
                {
                    "glove_model": self.glove_model.name,
                    "robot_model": self.robot_model.name,
                    "glove_dof": self.glove_model.dof_count,
                    "robot_dof": self.robot_model.dof_count,
                    "control_rate": config.loop.control_rate,
                    "scenario": self.scenario_name,
                    "config_hash": config.config_hash(),
                },
            )

        self.ticks_run = 0
        self.tick_durations: list[float] = []

    # -- command handling ---------------------------------------------------

    def submit(self, command: dict) -> None:
        """Queue an operator command; applied at the start of the next tick."""
        self.commands.put(command)

    def _apply_command(self, cmd: dict) -> None:
        kind = cmd.get("type")
        if kind == "set_glove_q":
            self.glove.set_pose(np.asarray(cmd["q"], dtype=float))
        elif kind == "set_config":
            updates = {k: v for k, v in cmd.items() if k != "type"}
            self.config = self.config.with_updates(updates)
            for engine in self.engines.values():
                engine.params = self.config.feedback
        elif kind == "scenario":
            name = cmd["name"]
            if name not in BUNDLED_SCENARIOS:
                raise DaemonError(f"unknown scenario {name!r}")
            self.scenario_name = name
            self.sim_state = scenario_load(bundled_scenario_text(name), self.robot_model)
            self.q_prev = self.sim_state.q_actual.copy()
            for engine in self.engines.values():
                engine.reset()
        else:
            raise DaemonError(f"unknown command type {kind!r}")

    def _drain_commands(self) -> None:
        while True:
            try:
                cmd = self.commands.get_nowait()
            except queue.Empty:
                return
            try:
                self._apply_command(cmd)
            except (DaemonError, ValueError, KeyError, TypeError):
                # commands are pre-validated at the network edge; a racing
                # invalid combination is dropped, never crashes the tick
                continue

    # -- sensing ------------------------------------------------------------

    def _ingest_simulated(self, t: float) -> None:
        items = self.glove.frames_between(self._t_sensed, t)
        self._t_sensed = t
        for ft, frame, servos in items:
            decoded = self.decoder.feed(encode_frame(frame))
            for valid in decoded:
                self.latest_state = assemble_glove_state(
                    valid,
                    servos,
                    self.tables,
                    self.zero_offsets,
                    self.glove_model,
                    self.channel_map,
                    timestamp_ns=round(ft * 1e9),
                )
                self.latest_servos = servos

    def _ingest_slot(self, slot: LatestSlot) -> None:
        item = slot.take()
        if item is None:
            return
        ft, raw, servos = item
        for valid in self.decoder.feed(raw):
            self.latest_state = assemble_glove_state(
                valid,
                servos,
                self.tables,
                self.zero_offsets,
                self.glove_model,
                self.channel_map,
                timestamp_ns=round(ft * 1e9),
            )
            self.latest_servos = servos

    # -- one control tick ---------------------------------------------------

    def _tick(self, tick_index: int, t: float) -> Snapshot:
        self._drain_commands()
        if self.latest_state is None:
            raise DaemonError("no glove state ingested before first tick")
        state = self.latest_state
        command = retarget_step(self.glove_model, self.robot_model, state, self.q_prev, self.config.retarget)
        self.q_prev = command.q_robot
        self.sim_state = step(self.sim_state, command, self.config.loop.dt)
        t_ns = tick_index * self.config.loop.period_ns
        readings = contact_forces(self.sim_state, self.robot_model, timestamp_ns=t_ns)

        servo_positions = self.latest_servos.positions if self.latest_servos else (0,) * 5
        feedback_cmds = []
        for idx, reading in enumerate(readings):
            engine = self.engines[reading.finger]
            feedback_cmds.append(engine.update(reading, servo_positions[idx]))

        wrist_rot, wrist_pos = self.wrist_source.pose(t)
        if self.recorder is not None:
            self.recorder.write(
                DemoRecord(
                    t_ns=t_ns,
                    glove_q=state.q,
                    robot_q=self.sim_state.q_actual,
                    forces=np.array([r.grams for r in readings]),
                    feedback=tuple(c.feedback_class for c in feedback_cmds),
                    wrist_rot=np.asarray(wrist_rot, dtype=float),
                    wrist_pos=np.asarray(wrist_pos, dtype=float),
                )
            )

        residuals = tuple(command.residuals.get(f, 0.0) for f in FINGERS)
        snapshot = Snapshot(
            t=t,
            glove_q=state.q,
            robot_q=self.sim_state.q_actual,
            forces=tuple(r.grams for r in readings),
            feedback=tuple(c.feedback_class.value for c in feedback_cmds),
            residuals=residuals,
            glove_points=_finger_polylines(self.glove_model, state.q),
            robot_points=_finger_polylines(self.robot_model, self.sim_state.q_actual),
            config_hash=self.config.config_hash(),
            scenario=self.scenario_name,
            tick=tick_index,
        )
        self.ticks_run = tick_index
        if self.on_snapshot is not None:
            self.on_snapshot(snapshot)
        return snapshot

    # -- run modes ----------------------------------------------------------

    def run_simulated(self, duration_s: float | None = None) -> str:
        """Deterministic run: exact ticks at k / control_rate. Returns the exit
        status ('completed' or 'disconnected')."""
        duration = self.config.loop.duration_s if duration_s is None else duration_s
        n_ticks = math.floor(duration * self.config.loop.control_rate + 1e-6)
        status = "completed"
        try:
            for k in range(1, n_ticks + 1):
                t = k / self.config.loop.control_rate
                t_wall = time.perf_counter()
                self._ingest_simulated(t)
                self._tick(k, t)
                self.tick_durations.append(time.perf_counter() - t_wall)
        except SourceDisconnected:
            status = "disconnected"
        finally:
            self.close()
        return status

    def run_wall_clock(self, stop_event: threading.Event, duration_s: float | None = None) -> str:
        """Wall-clock run with an independent 120 Hz sensing producer."""
        duration = self.config.loop.duration_s if duration_s is None else duration_s
        slot = LatestSlot()
        sensor_stop = threading.Event()

        def sink(t, frame, servos):
            slot.put((t, encode_frame(frame), servos))

        producer = threading.Thread(
            target=self.glove.run_wall_clock, args=(sink, sensor_stop), name="glove-producer", daemon=True
        )
        producer.start()
        period = self.config.loop.dt
        t_start = time.perf_counter()
        k = 0
        status = "completed"
        try:
            while not stop_event.is_set():
                k += 1
                target = t_start + k * period
                now = time.perf_counter()
                if target > now:
                    time.sleep(target - now)
                t = k * period
                if duration is not None and math.isfinite(duration) and t > duration:
                    break
                t_wall = time.perf_counter()
                self._ingest_slot(slot)
                if self.latest_state is None:
                    continue  # sensing producer not warmed up yet
                self._tick(k, t)
                self.tick_durations.append(time.perf_counter() - t_wall)
        except SourceDisconnected:
            status = "disconnected"
        finally:
            sensor_stop.set()
            producer.join(timeout=1.0)
            self.close()
        return status

    def close(self) -> None:
        if self.recorder is not None:
            self.recorder.close()

    def latency_stats(self) -> dict:
        if not self.tick_durations:
            return {"ticks": 0}
        durations = np.array(self.tick_durations)
        return {
            "ticks": int(len(durations)),
            "p50_ms": float(np.percentile(durations, 50) * 1e3),
            "p99_ms": float(np.percentile(durations, 99) * 1e3),
            "max_ms": float(durations.max() * 1e3),
            "durations_ms": (durations * 1e3).tolist(),
        }


# ---------------------------------------------------------------------------
# wiring helpers
# ---------------------------------------------------------------------------


def load_glove_model(config: AppConfig) -> HandModel:
    if config.glove_model_path:
        return load_hand_model_file(config.glove_model_path)
    return load_hand_model(bundled_model_text("glove21"))


def load_robot_model(config: AppConfig) -> HandModel:
    if config.robot_model_path:
        return load_hand_model_file(config.robot_model_path)
    return load_hand_model(bundled_model_text("leaphand16"))


def load_tables(config: AppConfig):
    if config.calibration_path:
        with open(config.calibration_path, "r", encoding="utf-8") as fh:
            return tables_from_json(fh.read())
    return identity_tables()


def load_zero_offsets(config: AppConfig, glove_model: HandModel) -> np.ndarray:
    if config.zero_offsets_path:
        offsets = np.loadtxt(config.zero_offsets_path, delimiter=",")
        if offsets.shape != (glove_model.dof_count,):
            raise DaemonError(f"zero offsets must have {glove_model.dof_count} entries")
        return offsets
    return default_zero_offsets(glove_model)


def build_glove(config: AppConfig, pose_source) -> SimulatedGlove:
    model = load_glove_model(config)
    from .glove import SinusoidalNonlinearity

    return SimulatedGlove(
        model,
        pose_source,
        noise=SinusoidalNonlinearity.none(),
        rate_hz=config.loop.mocap_rate,
        zero_offsets_deg=load_zero_offsets(config, model),
    )


def run_loop(config: AppConfig, glove_source: SimulatedGlove, pose_source=None, record_path=None, on_snapshot=None) -> str:
    """Run one session to completion per the configured clock; returns status."""
    loop = ControlLoop(config, glove_source, wrist_source=pose_source, record_path=record_path, on_snapshot=on_snapshot)
    if config.loop.clock == "simulated":
        return loop.run_simulated()
    return loop.run_wall_clock(threading.Event())


def build_interactive_loop(config: AppConfig, record_path=None, noise=None) -> ControlLoop:
    """Wall-clock loop whose glove pose is driven by operator commands."""
    from .glove import InteractivePose

    glove_model = load_glove_model(config)
    glove = build_glove(config, InteractivePose(np.zeros(glove_model.dof_count)))
    if noise is not None:
        glove.noise = noise
    return ControlLoop(config, glove, record_path=record_path)


# ---------------------------------------------------------------------------
# benchmarks (dexlink bench)
# ---------------------------------------------------------------------------


def bench_control_loop(config: AppConfig | None = None, ticks: int = 300) -> dict:
    """Tick-latency statistics for a scripted closing run in simulated clock.

    Latency is the compute time of one full control tick (ingest through
    snapshot); the simulated clock removes scheduling noise so the numbers
    reflect the work itself.
    """
    from .presets import closing_script

    config = config or AppConfig()
    glove_model = load_glove_model(config)
    duration = ticks / config.loop.control_rate
    glove = build_glove(config, closing_script(glove_model, duration_s=duration))
    loop = ControlLoop(config, glove)
    loop.run_simulated(duration_s=duration)
    return loop.latency_stats()


def bench_decode(n_frames: int = 4000, chunk: int = 4096) -> dict:
    """Sustained wire-decode throughput on an intact frame stream."""
    from .wire import ADC_MAX, EncoderFrame

    rng = np.random.default_rng(0)
    frames = [
        EncoderFrame(
            seq=i & 0xFF,
            adc_codes=tuple(int(c) for c in rng.integers(0, ADC_MAX + 1, 16)),
            vcc_code=14_400_000,
        )
        for i in range(n_frames)
    ]
    stream = b"".join(encode_frame(f) for f in frames)
    decoder = FrameDecoder()
    decoded = 0
    t0 = time.perf_counter()
    for i in range(0, len(stream), chunk):
        decoded += len(decoder.feed(stream[i : i + chunk]))
    elapsed = time.perf_counter() - t0
    return {"frames": decoded, "seconds": elapsed, "fps": decoded / elapsed}

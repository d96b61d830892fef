"""Glove sensing path: ADC conversion, calibration, servo readings, and a
simulated glove that inverts the pipeline with datasheet-faithful nonlinearity.

Decode direction (per control sample):

    adc code --raw_to_angle--> degrees --apply_calibration--> degrees
    servo ticks --servo_ticks_to_angle--> degrees
    then: subtract per-joint zero offset, convert to radians, clamp to limits.

The simulated glove runs the same chain in reverse: joint angles in radians
become per-channel absolute degrees (zero offset + angle), get distorted by a
per-channel nonlinearity bounded by 2 % of full scale, and are quantized to
24-bit ADC codes / 12-bit servo ticks.
"""

from __future__ import annotations

import csv
import io
import json
import math
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .kinematics import HandModel, clamp_to_limits
from .wire import ADC_MAX, N_CHANNELS, EncoderFrame

FULL_SCALE_DEG = 360.0
SERVO_TICK_COUNT = 4096
MAX_MOCAP_RATE_HZ = 120.0

# vcc code divisible by 360 * 40000 so whole hundredths of a degree map to
# exact ADC codes; the emulator's default reference sample
DEFAULT_VCC_CODE = 14_400_000

DEFAULT_ZERO_OFFSET_DEG = 180.0


class GloveError(Exception):
    pass


class ZeroReference(GloveError):
    """vcc code of zero cannot anchor the conversion."""


class OutOfRange(GloveError):
    pass


class EmptyTable(GloveError):
    pass


class InvalidRate(GloveError):
    pass


def raw_to_angle(adc_code: int, vcc_code: int) -> float:
    """Joint angle in degrees from an ADC code: (code / vcc) * 360.

    Ground (code 0) maps to 0 deg, the full-scale reference to 360 deg.
    Codes above the reference are clamped to full scale.
    """
    if vcc_code == 0:
        raise ZeroReference("vcc_code is zero")
    if adc_code < 0 or vcc_code < 0:
        raise OutOfRange("ADC codes are unsigned")
    if adc_code > vcc_code:
        adc_code = vcc_code
    return (adc_code / vcc_code) * FULL_SCALE_DEG


def servo_ticks_to_angle(ticks: int) -> float:
    """Servo position in degrees; 4096 ticks per revolution."""
    if not 0 <= ticks < SERVO_TICK_COUNT:
        raise OutOfRange(f"servo ticks {ticks} outside [0, {SERVO_TICK_COUNT - 1}]")
    return ticks * FULL_SCALE_DEG / SERVO_TICK_COUNT


def angle_to_code(deg: float, vcc_code: int = DEFAULT_VCC_CODE) -> int:
    """Emulator-side inverse of raw_to_angle, quantized to an integer code."""
    code = round(deg / FULL_SCALE_DEG * vcc_code)
    return max(0, min(code, vcc_code, ADC_MAX))


def angle_to_ticks(deg: float) -> int:
    ticks = round(deg * SERVO_TICK_COUNT / FULL_SCALE_DEG)
    return max(0, min(ticks, SERVO_TICK_COUNT - 1))


@dataclass(frozen=True)
class ServoState:
    positions: tuple[int, ...]
    currents: tuple[int, ...] = (0, 0, 0, 0, 0)

    def __post_init__(self):
        if len(self.positions) != 5 or len(self.currents) != 5:
            raise ValueError("servo state carries 5 positions and 5 currents")
        if any(not 0 <= t < SERVO_TICK_COUNT for t in self.positions):
            raise ValueError("servo ticks outside [0, 4095]")


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CalibrationTable:
    """Monotone piecewise-linear raw->true correction map (degrees)."""

    raw: np.ndarray
    true: np.ndarray

    def __post_init__(self):
        if len(self.raw) < 2 or len(self.raw) != len(self.true):
            raise EmptyTable("calibration table needs at least two knots")
        if not np.all(np.diff(self.raw) > 0):
            raise EmptyTable("knot raw values must be strictly increasing")


def identity_table() -> CalibrationTable:
    return CalibrationTable(raw=np.array([0.0, FULL_SCALE_DEG]), true=np.array([0.0, FULL_SCALE_DEG]))


def apply_calibration(table: CalibrationTable, raw_deg: float) -> float:
    """Interpolate through the knots; extrapolate linearly past the ends."""
    raw, true = table.raw, table.true
    if raw_deg <= raw[0]:
        slope = (true[1] - true[0]) / (raw[1] - raw[0])
        return float(true[0] + slope * (raw_deg - raw[0]))
    if raw_deg >= raw[-1]:
        slope = (true[-1] - true[-2]) / (raw[-1] - raw[-2])
        return float(true[-1] + slope * (raw_deg - raw[-1]))
    return float(np.interp(raw_deg, raw, true))


def build_calibration(measure_raw, spacing_deg: float = 5.0) -> CalibrationTable:
    """Correction table from a reference sweep.

    measure_raw maps a true reference angle (degrees) to the raw angle the
    channel reports; sweeping 0..360 at spacing_deg yields the knots.
    """
    if spacing_deg <= 0:
        raise ValueError("spacing must be positive")
    true = np.arange(0.0, FULL_SCALE_DEG + spacing_deg / 2, spacing_deg)
    true[-1] = min(true[-1], FULL_SCALE_DEG)
    raw = np.array([float(measure_raw(t)) for t in true])
    return CalibrationTable(raw=raw, true=true)


def tables_to_json(tables: dict[int, CalibrationTable]) -> str:
    doc = {
        str(ch): [[float(r), float(t)] for r, t in zip(tab.raw, tab.true)]
        for ch, tab in sorted(tables.items())
    }
    return json.dumps(doc, indent=1)


def tables_from_json(text: str) -> dict[int, CalibrationTable]:
    doc = json.loads(text)
    out = {}
    for ch, knots in doc.items():
        knots = np.asarray(knots, dtype=float)
        out[int(ch)] = CalibrationTable(raw=knots[:, 0], true=knots[:, 1])
    return out


# ---------------------------------------------------------------------------
# channel layout and state assembly
# ---------------------------------------------------------------------------

# Encoder channels in wire order; the wrist pronation-supination DoF sits in
# the last encoder slot (assumption flagged in the model file). Flexion drive
# joints are read back from the five servos instead.
GLOVE21_ENCODER_JOINTS = (
    "thumb_tm_s",
    "thumb_mcp",
    "thumb_ip",
    "index_mcp_s",
    "index_pip",
    "index_dip",
    "middle_mcp_s",
    "middle_pip",
    "middle_dip",
    "ring_mcp_s",
    "ring_pip",
    "ring_dip",
    "pinky_mcp_s",
    "pinky_pip",
    "pinky_dip",
    "thumb_wrist_ps",
)

GLOVE21_SERVO_JOINTS = ("thumb_tm_b", "index_mcp_b", "middle_mcp_b", "ring_mcp_b", "pinky_mcp_b")


@dataclass(frozen=True)
class GloveChannelMap:
    encoder_joints: tuple[str, ...] = GLOVE21_ENCODER_JOINTS
    servo_joints: tuple[str, ...] = GLOVE21_SERVO_JOINTS

    def __post_init__(self):
        if len(self.encoder_joints) != N_CHANNELS:
            raise ValueError(f"expected {N_CHANNELS} encoder joints")
        if len(self.servo_joints) != 5:
            raise ValueError("expected 5 servo joints")

    def indices(self, model: HandModel) -> tuple[np.ndarray, np.ndarray]:
        enc = np.array([model.joint_index(n) for n in self.encoder_joints], dtype=int)
        srv = np.array([model.joint_index(n) for n in self.servo_joints], dtype=int)
        return enc, srv


@dataclass(frozen=True, eq=False)
class GloveJointState:
    """Calibrated 21-joint glove state in radians, glove joint order."""

    q: np.ndarray
    timestamp_ns: int
    seq: int
    clamped_joints: tuple[int, ...] = ()


def assemble_glove_state(
    frame: EncoderFrame,
    servos: ServoState,
    tables: dict[int, CalibrationTable],
    zero_offsets_deg: np.ndarray,
    model: HandModel,
    channel_map: GloveChannelMap | None = None,
    timestamp_ns: int = 0,
) -> GloveJointState:
    """Fuse one encoder frame and servo reading into a joint state.

    The frame's CRC is assumed to be already validated by the wire decoder.
    """
    channel_map = channel_map or GloveChannelMap()
    enc_idx, srv_idx = channel_map.indices(model)
    zero_offsets_deg = np.asarray(zero_offsets_deg, dtype=float)
    if zero_offsets_deg.shape != (model.dof_count,):
        raise GloveError(f"expected {model.dof_count} zero offsets")

    q_deg = np.zeros(model.dof_count)
    for ch in range(N_CHANNELS):
        if ch not in tables:
            raise EmptyTable(f"missing calibration table for channel {ch}")
        deg = apply_calibration(tables[ch], raw_to_angle(frame.adc_codes[ch], frame.vcc_code))
        joint = enc_idx[ch]
        q_deg[joint] = deg - zero_offsets_deg[joint]
    for s in range(5):
        joint = srv_idx[s]
        q_deg[joint] = servo_ticks_to_angle(servos.positions[s]) - zero_offsets_deg[joint]

    q = np.radians(q_deg)
    clamped = clamp_to_limits(model, q)
    flagged = tuple(int(j) for j in np.nonzero(np.abs(clamped - q) > 1e-6)[0])
    return GloveJointState(q=clamped, timestamp_ns=timestamp_ns, seq=frame.seq, clamped_joints=flagged)


def identity_tables() -> dict[int, CalibrationTable]:
    return {ch: identity_table() for ch in range(N_CHANNELS)}


def default_zero_offsets(model: HandModel) -> np.ndarray:
    return np.full(model.dof_count, DEFAULT_ZERO_OFFSET_DEG)


# ---------------------------------------------------------------------------
# nonlinearity model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SinusoidalNonlinearity:
    """Per-channel smooth distortion bounded by amplitude_frac of full scale."""

    amplitude_frac: float
    phases: np.ndarray

    @classmethod
    def none(cls) -> "SinusoidalNonlinearity":
        return cls(amplitude_frac=0.0, phases=np.zeros(N_CHANNELS))

    @classmethod
    def sample(cls, rng: np.random.Generator, amplitude_frac: float = 0.02) -> "SinusoidalNonlinearity":
        return cls(amplitude_frac=amplitude_frac, phases=rng.uniform(0.0, 2.0 * math.pi, N_CHANNELS))

    def distort(self, channel: int, true_deg: float) -> float:
        amp = self.amplitude_frac * FULL_SCALE_DEG
        return true_deg + amp * math.sin(2.0 * math.pi * true_deg / FULL_SCALE_DEG + self.phases[channel])


# ---------------------------------------------------------------------------
# pose sources
# ---------------------------------------------------------------------------


class PoseScript:
    """Time-parameterized joint trajectory, linearly interpolated.

    CSV format: header optional, columns t_seconds, q0..q(d-1) in radians.
    """

    def __init__(self, times: np.ndarray, poses: np.ndarray, end_behavior: str = "hold"):
        times = np.asarray(times, dtype=float)
        poses = np.asarray(poses, dtype=float)
        if times.ndim != 1 or poses.shape[0] != times.shape[0]:
            raise ValueError("times and poses must align")
        if not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        if end_behavior not in ("hold", "stop"):
            raise ValueError("end_behavior must be 'hold' or 'stop'")
        self.times = times
        self.poses = poses
        self.end_behavior = end_behavior

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    @classmethod
    def constant(cls, q, duration: float = math.inf) -> "PoseScript":
        q = np.asarray(q, dtype=float)
        end = 1.0 if math.isinf(duration) else duration
        script = cls(np.array([0.0, end]), np.stack([q, q]))
        if math.isinf(duration):
            script.times = np.array([0.0, math.inf])
        return script

    @classmethod
    def from_csv(cls, text: str, end_behavior: str = "hold") -> "PoseScript":
        rows = []
        for row in csv.reader(io.StringIO(text)):
            if not row or not row[0].strip():
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                continue  # header line
        if not rows:
            raise ValueError("pose script has no numeric rows")
        data = np.asarray(rows, dtype=float)
        return cls(times=data[:, 0], poses=data[:, 1:], end_behavior=end_behavior)

    @classmethod
    def load(cls, path, end_behavior: str = "hold") -> "PoseScript":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_csv(fh.read(), end_behavior=end_behavior)

    def ended(self, t: float) -> bool:
        return self.end_behavior == "stop" and t > self.duration

    def sample(self, t: float) -> np.ndarray:
        times, poses = self.times, self.poses
        if t <= times[0]:
            return poses[0].copy()
        if t >= times[-1]:
            return poses[-1].copy()
        i = int(np.searchsorted(times, t, side="right")) - 1
        span = times[i + 1] - times[i]
        w = 0.0 if not math.isfinite(span) else (t - times[i]) / span
        return (1.0 - w) * poses[i] + w * poses[i + 1]


class InteractivePose:
    """Thread-safe pose holder driven by operator commands."""

    def __init__(self, q0):
        self._q = np.asarray(q0, dtype=float).copy()
        self._lock = threading.Lock()

    def set(self, q) -> None:
        q = np.asarray(q, dtype=float)
        with self._lock:
            self._q = q.copy()

    def sample(self, t: float) -> np.ndarray:
        with self._lock:
            return self._q.copy()

    def ended(self, t: float) -> bool:
        return False


# ---------------------------------------------------------------------------
# simulated glove
# ---------------------------------------------------------------------------


class SourceDisconnected(GloveError):
    """The glove stream ended (scripted source ran out)."""


class SimulatedGlove:
    """Streams encoder frames + servo states for a scripted or interactive pose.

    Single producer; `set_pose` may be called from another thread when the
    pose source is interactive.
    """

    def __init__(
        self,
        model: HandModel,
        pose_source,
        noise: SinusoidalNonlinearity | None = None,
        rate_hz: float = MAX_MOCAP_RATE_HZ,
        channel_map: GloveChannelMap | None = None,
        zero_offsets_deg: np.ndarray | None = None,
        vcc_code: int = DEFAULT_VCC_CODE,
    ):
        if not 0.0 < rate_hz <= MAX_MOCAP_RATE_HZ:
            raise InvalidRate(f"rate {rate_hz} Hz outside (0, {MAX_MOCAP_RATE_HZ}]")
        self.model = model
        self.pose_source = pose_source
        self.noise = noise or SinusoidalNonlinearity.none()
        self.rate_hz = float(rate_hz)
        self.channel_map = channel_map or GloveChannelMap()
        self.zero_offsets_deg = (
            default_zero_offsets(model) if zero_offsets_deg is None else np.asarray(zero_offsets_deg, dtype=float)
        )
        self.vcc_code = int(vcc_code)
        self._enc_idx, self._srv_idx = self.channel_map.indices(model)
        self._seq = 0
        self._frames_emitted = 0

    def set_pose(self, q) -> None:
        if not hasattr(self.pose_source, "set"):
            raise GloveError("pose source is not interactive")
        self.pose_source.set(q)

    def sample_at(self, t: float) -> tuple[EncoderFrame, ServoState]:
        """Sensor readings for the pose at time t (no seq side effects)."""
        q = self.pose_source.sample(t)
        return self._encode(q, seq=self._seq)

    def _encode(self, q, seq: int) -> tuple[EncoderFrame, ServoState]:
        q_deg = np.degrees(np.asarray(q, dtype=float))
        codes = []
        for ch in range(N_CHANNELS):
            joint = self._enc_idx[ch]
            true_abs = self.zero_offsets_deg[joint] + q_deg[joint]
            codes.append(angle_to_code(self.noise.distort(ch, true_abs), self.vcc_code))
        ticks = []
        for s in range(5):
            joint = self._srv_idx[s]
            ticks.append(angle_to_ticks(self.zero_offsets_deg[joint] + q_deg[joint]))
        frame = EncoderFrame(seq=seq & 0xFF, adc_codes=tuple(codes), vcc_code=self.vcc_code)
        return frame, ServoState(positions=tuple(ticks))

    def frames_between(self, t0: float, t1: float) -> list[tuple[float, EncoderFrame, ServoState]]:
        """Frames scheduled at k / rate in (t0, t1], simulation clock.

        Raises SourceDisconnected once a 'stop' pose script has run out.
        """
        # nudge by 1e-6 frame periods so t0 == k/rate never double-emits
        k0 = math.floor(t0 * self.rate_hz + 1e-6) + 1
        k1 = math.floor(t1 * self.rate_hz + 1e-6)
        out = []
        for k in range(k0, k1 + 1):
            out.append(self._emit(k / self.rate_hz))
        return out

    def _emit(self, t: float) -> tuple[float, EncoderFrame, ServoState]:
        if self.pose_source.ended(t):
            raise SourceDisconnected(f"pose script ended at {self.pose_source.duration:.3f}s")
        frame, servo = self._encode(self.pose_source.sample(t), seq=self._seq)
        self._seq = (self._seq + 1) & 0xFF
        self._frames_emitted += 1
        return t, frame, servo

    def stream(self, duration_s: float):
        """Generator over (t, frame, servo) at the exact simulated rate."""
        last = math.floor(duration_s * self.rate_hz + 1e-6)
        for k in range(1, last + 1):
            yield self._emit(k / self.rate_hz)

    def run_wall_clock(self, sink, stop_event: threading.Event) -> None:
        """Producer loop for wall-clock mode: best-effort pacing at rate_hz."""
        period = 1.0 / self.rate_hz
        t_start = time.perf_counter()
        k = 1
        while not stop_event.is_set():
            target = t_start + k * period
            now = time.perf_counter()
            if target > now:
                time.sleep(min(target - now, period))
                continue
            t = k * period
            if self.pose_source.ended(t):
                break
            frame, servo = self._encode(self.pose_source.sample(t), seq=self._seq)
            self._seq = (self._seq + 1) & 0xFF
            sink(t, frame, servo)
            k += 1

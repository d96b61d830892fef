"""Demonstration log format: JSON header + length-prefixed binary records.

File layout:

    b"DXLG" | u32 header_len | header JSON (utf-8) | records...
    record: u32 payload_len | payload

Record payload, little-endian:

    t_ns i64 | glove_q f64 x glove_dof | robot_q f64 x robot_dof
    | forces f64 x 5 | feedback u8 x 5 | wrist rot f64 x 9 | wrist pos f64 x 3

The header carries no wall-clock data, so identical runs produce identical
bytes. Replay scales the inter-record schedule by 1/speed and never alters
record contents.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .feedback import CLASS_ORDER, FeedbackClass

MAGIC = b"DXLG"
SCHEMA_VERSION = 1


class RecordingError(Exception):
    pass


class CorruptRecord(RecordingError):
    """Log damaged; last_valid_index is the final intact record."""

    def __init__(self, message: str, last_valid_index: int):
        super().__init__(f"{message} (last valid record index: {last_valid_index})")
        self.last_valid_index = last_valid_index


@dataclass(frozen=True, eq=False)
class DemoRecord:
    t_ns: int
    glove_q: np.ndarray
    robot_q: np.ndarray
    forces: np.ndarray  # grams, 5 entries
    feedback: tuple[FeedbackClass, ...]
    wrist_rot: np.ndarray
    wrist_pos: np.ndarray

    def equals(self, other: "DemoRecord") -> bool:
        return (
            self.t_ns == other.t_ns
            and (self.glove_q == other.glove_q).all()
            and (self.robot_q == other.robot_q).all()
            and (self.forces == other.forces).all()
            and self.feedback == other.feedback
            and (self.wrist_rot == other.wrist_rot).all()
            and (self.wrist_pos == other.wrist_pos).all()
        )


def _record_struct(glove_dof: int, robot_dof: int) -> struct.Struct:
    return struct.Struct(f"<q{glove_dof}d{robot_dof}d5d5B12d")


def pack_record(rec: DemoRecord, fmt: struct.Struct) -> bytes:
    values = (
        rec.t_ns,
        *rec.glove_q.tolist(),
        *rec.robot_q.tolist(),
        *rec.forces.tolist(),
        *(CLASS_ORDER.index(c) for c in rec.feedback),
        *rec.wrist_rot.reshape(9).tolist(),
        *rec.wrist_pos.tolist(),
    )
    return fmt.pack(*values)


def unpack_record(payload: bytes, fmt: struct.Struct, glove_dof: int, robot_dof: int) -> DemoRecord:
    values = fmt.unpack(payload)
    i = 1
    glove_q = np.array(values[i : i + glove_dof])
    i += glove_dof
    robot_q = np.array(values[i : i + robot_dof])
    i += robot_dof
    forces = np.array(values[i : i + 5])
    i += 5
    feedback = tuple(CLASS_ORDER[v] for v in values[i : i + 5])
    i += 5
    wrist_rot = np.array(values[i : i + 9]).reshape(3, 3)
    i += 9
    wrist_pos = np.array(values[i : i + 3])
    return DemoRecord(
        t_ns=values[0],
        glove_q=glove_q,
        robot_q=robot_q,
        forces=forces,
        feedback=feedback,
        wrist_rot=wrist_rot,
        wrist_pos=wrist_pos,
    )


class DemoWriter:
    """Streams DemoRecords to disk; one record per control tick."""

    def __init__(self, path, header: dict):
        self.path = path
        self.header = {"schema": SCHEMA_VERSION, **header}
        if "glove_dof" not in self.header or "robot_dof" not in self.header:
            raise RecordingError("header must carry glove_dof and robot_dof")
        self._fmt = _record_struct(self.header["glove_dof"], self.header["robot_dof"])
        self._fh = open(path, "wb")
        blob = json.dumps(self.header, sort_keys=True).encode()
        self._fh.write(MAGIC + struct.pack("<I", len(blob)) + blob)
        self.records_written = 0
        self._last_t_ns: int | None = None

    def write(self, rec: DemoRecord) -> None:
        if self._last_t_ns is not None and rec.t_ns <= self._last_t_ns:
            raise RecordingError(f"record timestamps must increase ({rec.t_ns} after {self._last_t_ns})")
        self._last_t_ns = rec.t_ns
        payload = pack_record(rec, self._fmt)
        self._fh.write(struct.pack("<I", len(payload)) + payload)
        self.records_written += 1

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_demo(path) -> tuple[dict, list[DemoRecord]]:
    """Load a whole demonstration file; raises CorruptRecord on damage."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC or len(blob) < 8:
        raise CorruptRecord("bad magic or truncated header", last_valid_index=-1)
    (header_len,) = struct.unpack_from("<I", blob, 4)
    header_end = 8 + header_len
    if header_end > len(blob):
        raise CorruptRecord("truncated header", last_valid_index=-1)
    try:
        header = json.loads(blob[8:header_end].decode())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptRecord(f"unreadable header: {exc}", last_valid_index=-1) from exc
    fmt = _record_struct(header["glove_dof"], header["robot_dof"])

    records: list[DemoRecord] = []
    pos = header_end
    while pos < len(blob):
        if pos + 4 > len(blob):
            raise CorruptRecord("trailing bytes where a length prefix should be", len(records) - 1)
        (length,) = struct.unpack_from("<I", blob, pos)
        if length != fmt.size:
            raise CorruptRecord(f"record length {length} does not match schema {fmt.size}", len(records) - 1)
        pos += 4
        if pos + length > len(blob):
            raise CorruptRecord("truncated record payload", len(records) - 1)
        records.append(unpack_record(blob[pos : pos + length], fmt, header["glove_dof"], header["robot_dof"]))
        pos += length
    return header, records


def replay(path, speed: float = 1.0):
    """Yield (delivery_time_s, DemoRecord) with inter-record time scaled 1/speed.

    Delivery times are relative to the first record; contents are untouched.
    """
    if speed <= 0:
        raise RecordingError("replay speed must be positive")
    header, records = read_demo(path)
    if not records:
        return
    t0 = records[0].t_ns
    for rec in records:
        yield (rec.t_ns - t0) / 1e9 / speed, rec

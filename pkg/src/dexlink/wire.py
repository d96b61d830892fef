"""Binary sensor frame codec with resync (documented in docs/wire.md).

Frame layout, 56 bytes total, all fields big-endian:

    0xAA 0x55 | seq u8 | 16 x adc u24 | vcc u24 | crc u16

The CRC is CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF) over the 52 payload
bytes between the sync word and the checksum. A CRC-valid frame must also
carry vcc > 0; anything else is treated as line corruption and skipped.

Scanning resumes one byte after a failed candidate, so a corrupt frame never
shadows the next intact one.
"""

from __future__ import annotations

import binascii
from dataclasses import dataclass

SYNC = b"\xaa\x55"
N_CHANNELS = 16
PAYLOAD_LEN = 1 + 3 * N_CHANNELS + 3  # seq + adc codes + vcc
FRAME_LEN = 2 + PAYLOAD_LEN + 2
ADC_MAX = (1 << 24) - 1


class WireError(Exception):
    pass


class Incomplete(WireError):
    """Buffer holds no complete frame yet; feed more bytes."""


class CrcMismatch(WireError):
    """Only corrupt frame candidates were found in the buffer."""


@dataclass(frozen=True)
class EncoderFrame:
    seq: int
    adc_codes: tuple[int, ...]
    vcc_code: int

    def __post_init__(self):
        if not 0 <= self.seq <= 0xFF:
            raise ValueError("seq must fit in one byte")
        if len(self.adc_codes) != N_CHANNELS:
            raise ValueError(f"expected {N_CHANNELS} adc codes")
        if any(not 0 <= c <= ADC_MAX for c in self.adc_codes):
            raise ValueError("adc code out of 24-bit range")
        if not 0 < self.vcc_code <= ADC_MAX:
            raise ValueError("vcc code must be positive and fit in 24 bits")


def crc16(payload: bytes) -> int:
    return binascii.crc_hqx(payload, 0xFFFF)


def encode_frame(frame: EncoderFrame) -> bytes:
    payload = bytearray()
    payload.append(frame.seq)
    for code in frame.adc_codes:
        payload += code.to_bytes(3, "big")
    payload += frame.vcc_code.to_bytes(3, "big")
    return SYNC + bytes(payload) + crc16(bytes(payload)).to_bytes(2, "big")


def _parse_candidate(chunk: bytes) -> EncoderFrame | None:
    payload = chunk[2:-2]
    if crc16(payload) != int.from_bytes(chunk[-2:], "big"):
        return None
    vcc = int.from_bytes(payload[-3:], "big")
    if vcc == 0:
        return None
    codes = tuple(int.from_bytes(payload[1 + 3 * i : 4 + 3 * i], "big") for i in range(N_CHANNELS))
    return EncoderFrame(seq=payload[0], adc_codes=codes, vcc_code=vcc)


def scan_frames(buf: bytes) -> tuple[list[tuple[EncoderFrame, int]], int, int]:
    """All valid frames in buf as (frame, end_offset), plus the resume offset
    for the next feed and the number of corrupt candidates skipped."""
    frames: list[tuple[EncoderFrame, int]] = []
    rejects = 0
    pos = 0
    n = len(buf)
    while True:
        i = buf.find(SYNC, pos)
        if i < 0:
            # a lone trailing 0xAA may be the start of the next sync word
            resume = n - 1 if n > pos and buf[-1] == SYNC[0] else n
            return frames, max(resume, pos), rejects
        if i + FRAME_LEN > n:
            return frames, i, rejects
        frame = _parse_candidate(buf[i : i + FRAME_LEN])
        if frame is None:
            rejects += 1
            pos = i + 1
        else:
            frames.append((frame, i + FRAME_LEN))
            pos = i + FRAME_LEN


def decode_frame(buf: bytes) -> tuple[EncoderFrame, int]:
    """First valid frame in buf and the bytes consumed up to its end.

    Raises CrcMismatch if only corrupt candidates were found, Incomplete if
    more bytes are needed either way.
    """
    frames, _, rejects = scan_frames(buf)
    if frames:
        return frames[0]
    if rejects:
        raise CrcMismatch(f"{rejects} corrupt frame candidate(s), no valid frame")
    raise Incomplete("no complete frame in buffer")


class FrameDecoder:
    """Stateful streaming decoder: single-owner, not thread-safe.

    Tracks sequence gaps so consumers can count dropped frames: `dropped`
    accumulates (seq_now - seq_prev - 1) mod 256 over accepted frames.
    """

    def __init__(self):
        self._buf = bytearray()
        self._last_seq: int | None = None
        self.dropped = 0
        self.crc_errors = 0
        self.frames_decoded = 0

    def feed(self, data: bytes) -> list[EncoderFrame]:
        self._buf += data
        frames, resume, rejects = scan_frames(bytes(self._buf))
        del self._buf[:resume]
        self.crc_errors += rejects
        out = []
        for frame, _ in frames:
            if self._last_seq is not None:
                self.dropped += (frame.seq - self._last_seq - 1) % 256
            self._last_seq = frame.seq
            self.frames_decoded += 1
            out.append(frame)
        return out

"""Combined haptic + force feedback policy driven by fingertip force readings.

Force bands (grams, defaults; thresholds belong to the higher band):

    < 10         no feedback
    [10, 50)     haptic only
    [50, 100)    haptic + force
    >= 100       force only

Force feedback holds the glove servo at its current position with a stiffness
gain mapped linearly from the clamped [0, 3000] g reading; haptic feedback
always plays waveform 56. A small hysteresis band around each threshold stops
class chatter at the sensor's 1 g resolution: a class change requires the
reading to cross the boundary by hysteresis_g.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

SENSOR_MAX_G = 3000.0
HAPTIC_WAVEFORM_ID = 56

DEFAULT_THRESHOLDS_G = (10.0, 50.0, 100.0)


class FeedbackError(Exception):
    pass


class NegativeForce(FeedbackError):
    pass


class FeedbackClass(enum.Enum):
    NONE = "none"
    HAPTIC_ONLY = "haptic"
    HAPTIC_AND_FORCE = "haptic_force"
    FORCE_ONLY = "force"

    @property
    def haptic(self) -> bool:
        return self in (FeedbackClass.HAPTIC_ONLY, FeedbackClass.HAPTIC_AND_FORCE)

    @property
    def force(self) -> bool:
        return self in (FeedbackClass.HAPTIC_AND_FORCE, FeedbackClass.FORCE_ONLY)


# band order, also the on-disk / on-wire encoding of a class
CLASS_ORDER = (
    FeedbackClass.NONE,
    FeedbackClass.HAPTIC_ONLY,
    FeedbackClass.HAPTIC_AND_FORCE,
    FeedbackClass.FORCE_ONLY,
)
_CLASS_ORDER = CLASS_ORDER


@dataclass(frozen=True)
class ForceReading:
    finger: str
    grams: float
    timestamp_ns: int = 0
    overrange: bool = False

    def __post_init__(self):
        if self.grams < 0:
            raise NegativeForce(f"{self.finger}: negative force reading {self.grams} g")


@dataclass(frozen=True)
class FeedbackParams:
    kp_max: float = 800.0
    hysteresis_g: float = 2.0
    thresholds_g: tuple[float, float, float] = DEFAULT_THRESHOLDS_G

    def __post_init__(self):
        t1, t2, t3 = self.thresholds_g
        if not (0.0 < t1 <= t2 <= t3):
            raise ValueError("thresholds must be positive and non-decreasing")
        if not 0.0 <= self.hysteresis_g < t1:
            raise ValueError("hysteresis must be non-negative and below the first threshold")
        if self.kp_max <= 0:
            raise ValueError("kp_max must be positive")


@dataclass(frozen=True)
class FeedbackCommand:
    finger: str
    servo_kp: float
    servo_goal: int
    haptic_active: bool
    waveform_id: int
    feedback_class: FeedbackClass


def classify_force(grams: float, thresholds_g=DEFAULT_THRESHOLDS_G) -> FeedbackClass:
    """Band lookup; each threshold value belongs to the higher class."""
    if grams < 0:
        raise NegativeForce(f"negative force reading {grams} g")
    t1, t2, t3 = thresholds_g
    if grams >= t3:
        return FeedbackClass.FORCE_ONLY
    if grams >= t2:
        return FeedbackClass.HAPTIC_AND_FORCE
    if grams >= t1:
        return FeedbackClass.HAPTIC_ONLY
    return FeedbackClass.NONE


def classify_with_hysteresis(
    grams: float, previous: FeedbackClass, params: FeedbackParams
) -> FeedbackClass:
    """Rising edges need grams >= threshold + h, falling edges grams < threshold - h."""
    h = params.hysteresis_g
    up = classify_force(max(grams - h, 0.0), params.thresholds_g)
    down = classify_force(grams + h, params.thresholds_g)
    prev_rank = _CLASS_ORDER.index(previous)
    if _CLASS_ORDER.index(up) > prev_rank:
        return up
    if _CLASS_ORDER.index(down) < prev_rank:
        return down
    return previous


def force_to_kp(grams: float, kp_max: float) -> float:
    """Clamp to the sensor range and map linearly onto [0, kp_max]."""
    clamped = min(max(grams, 0.0), SENSOR_MAX_G)
    return clamped / SENSOR_MAX_G * kp_max


class FeedbackEngine:
    """Per-finger hysteresis state machine emitting FeedbackCommands.

    Single-owner: updated only by the control thread.
    """

    def __init__(self, finger: str, params: FeedbackParams | None = None):
        self.finger = finger
        self.params = params or FeedbackParams()
        self.last_class = FeedbackClass.NONE

    def reset(self) -> None:
        self.last_class = FeedbackClass.NONE

    def update(self, reading: ForceReading, glove_servo_pos: int) -> FeedbackCommand:
        cls = classify_with_hysteresis(reading.grams, self.last_class, self.params)
        self.last_class = cls
        # the kp map sees the raw clamped reading, not the hysteresis output
        kp = force_to_kp(reading.grams, self.params.kp_max) if cls.force else 0.0
        return FeedbackCommand(
            finger=self.finger,
            servo_kp=kp,
            servo_goal=int(glove_servo_pos),
            haptic_active=cls.haptic,
            waveform_id=HAPTIC_WAVEFORM_ID,
            feedback_class=cls,
        )


def make_engines(params: FeedbackParams | None = None) -> dict[str, FeedbackEngine]:
    from .kinematics import FINGERS

    params = params or FeedbackParams()
    return {finger: FeedbackEngine(finger, params) for finger in FINGERS}

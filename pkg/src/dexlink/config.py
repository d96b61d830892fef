"""One configuration document for the whole daemon.

JSON with sections `models`, `retarget`, `feedback`, `loop`, `serve`; every
field is optional and falls back to the bundled defaults. The config hash
covers the knobs an operator can change mid-run, so clients can tell when a
set_config command has landed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from .feedback import FeedbackParams
from .retarget import RetargetConfig


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class LoopConfig:
    mocap_rate: float = 120.0
    control_rate: float = 30.0
    clock: str = "simulated"
    scenario: str = "grasp_bottle"
    duration_s: float = 10.0
    pose_script: str | None = None

    def __post_init__(self):
        if self.control_rate < 30.0:
            raise ConfigError("control_rate must be at least 30 Hz")
        if self.mocap_rate < self.control_rate:
            raise ConfigError("mocap_rate must be at least the control rate")
        if self.clock not in ("wall", "simulated"):
            raise ConfigError(f"unknown clock {self.clock!r}")

    @property
    def dt(self) -> float:
        return 1.0 / self.control_rate

    @property
    def period_ns(self) -> int:
        return round(1e9 / self.control_rate)


@dataclass(frozen=True)
class AppConfig:
    glove_model_path: str | None = None  # None: bundled glove21
    robot_model_path: str | None = None  # None: bundled leaphand16
    calibration_path: str | None = None  # None: identity tables
    zero_offsets_path: str | None = None  # None: flat-hand defaults
    retarget: RetargetConfig = field(default_factory=RetargetConfig)
    feedback: FeedbackParams = field(default_factory=FeedbackParams)
    loop: LoopConfig = field(default_factory=LoopConfig)
    serve_host: str = "127.0.0.1"
    serve_port: int = 8765

    def config_hash(self) -> str:
        knobs = {
            "scale": self.retarget.scale,
            "damping": self.retarget.damping,
            "step_limit": self.retarget.step_limit,
            "max_iters": self.retarget.max_iters,
            "pos_tolerance": self.retarget.pos_tolerance,
            "weights": sorted(self.retarget.finger_weights.items()),
            "origin_offset": list(self.retarget.origin_offset),
            "kp_max": self.feedback.kp_max,
            "hysteresis_g": self.feedback.hysteresis_g,
            "thresholds": list(self.feedback.thresholds_g),
        }
        digest = hashlib.sha1(json.dumps(knobs, sort_keys=True).encode()).hexdigest()
        return digest[:12]

    def with_updates(self, updates: dict) -> "AppConfig":
        """New config with operator-tunable knobs replaced; validates via the
        dataclass constructors."""
        retarget = self.retarget
        feedback = self.feedback
        if "scale" in updates:
            retarget = replace(retarget, scale=float(updates["scale"]))
        if "thresholds" in updates:
            t = updates["thresholds"]
            feedback = replace(feedback, thresholds_g=(float(t[0]), float(t[1]), float(t[2])))
        if "kp_max" in updates:
            feedback = replace(feedback, kp_max=float(updates["kp_max"]))
        if "hysteresis_g" in updates:
            feedback = replace(feedback, hysteresis_g=float(updates["hysteresis_g"]))
        return replace(self, retarget=retarget, feedback=feedback)


def _build_retarget(doc: dict) -> RetargetConfig:
    kwargs = {}
    for key in ("scale", "damping", "step_limit", "pos_tolerance"):
        if key in doc:
            kwargs[key] = float(doc[key])
    if "max_iters" in doc:
        kwargs["max_iters"] = int(doc["max_iters"])
    if "finger_weights" in doc:
        base = {"thumb": 2.0, "index": 1.0, "middle": 1.0, "ring": 1.0, "pinky": 1.0}
        base.update({k: float(v) for k, v in doc["finger_weights"].items()})
        kwargs["finger_weights"] = base
    if "origin_offset" in doc:
        kwargs["origin_offset"] = tuple(float(v) for v in doc["origin_offset"])
    return RetargetConfig(**kwargs)


def _build_feedback(doc: dict) -> FeedbackParams:
    kwargs = {}
    if "kp_max" in doc:
        kwargs["kp_max"] = float(doc["kp_max"])
    if "hysteresis_g" in doc:
        kwargs["hysteresis_g"] = float(doc["hysteresis_g"])
    if "thresholds" in doc:
        t = doc["thresholds"]
        kwargs["thresholds_g"] = (float(t[0]), float(t[1]), float(t[2]))
    return FeedbackParams(**kwargs)


def _build_loop(doc: dict) -> LoopConfig:
    kwargs = {}
    for key in ("mocap_rate", "control_rate", "duration_s"):
        if key in doc:
            kwargs[key] = float(doc[key])
    for key in ("clock", "scenario", "pose_script"):
        if key in doc:
            kwargs[key] = doc[key]
    return LoopConfig(**kwargs)


def config_from_dict(doc: dict) -> AppConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    models = doc.get("models", {})
    serve = doc.get("serve", {})
    try:
        return AppConfig(
            glove_model_path=models.get("glove"),
            robot_model_path=models.get("robot"),
            calibration_path=models.get("calibration"),
            zero_offsets_path=models.get("zero_offsets"),
            retarget=_build_retarget(doc.get("retarget", {})),
            feedback=_build_feedback(doc.get("feedback", {})),
            loop=_build_loop(doc.get("loop", {})),
            serve_host=serve.get("host", "127.0.0.1"),
            serve_port=int(serve.get("port", 8765)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def load_config(path: str | None) -> AppConfig:
    if path is None:
        return AppConfig()
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid config JSON: {exc}") from exc
    return config_from_dict(doc)

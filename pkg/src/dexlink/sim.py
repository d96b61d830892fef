"""Desk-scale contact environment: first-order joint servos plus static
primitive objects that turn fingertip penetration into force readings.

Objects never move; penetration is point-fingertip vs analytic primitive, and
the sensor model is grams = round(clamp(k * depth, 0, 3000)) with k in grams
per meter. Rounding to the 1 g sensor resolution happens only at that
boundary, so the pre-rounding force is continuous in the fingertip position.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .feedback import SENSOR_MAX_G, ForceReading
from .kinematics import FINGERS, HandModel, ParseError, ValidationError, clamp_to_limits, forward_kinematics
from .transforms import rpy_to_matrix

SHAPES = ("sphere", "box", "cylinder")

DEFAULT_OMEGA_MAX = 4.0  # rad/s per joint


class SimError(Exception):
    pass


class InvalidDt(SimError):
    pass


@dataclass(frozen=True, eq=False)
class SceneObject:
    object_id: str
    kind: str
    size: np.ndarray  # sphere: [r]; box: [hx, hy, hz]; cylinder: [r, half_height]
    rot: np.ndarray
    pos: np.ndarray
    stiffness_k: float
    softness: str = ""

    def penetration(self, point: np.ndarray) -> float:
        """Signed depth of a point into the shape; positive means inside."""
        local = self.rot.T @ (point - self.pos)
        if self.kind == "sphere":
            return float(self.size[0] - np.linalg.norm(local))
        if self.kind == "box":
            gaps = self.size - np.abs(local)
            return float(np.min(gaps))
        # cylinder, axis along local z
        dr = self.size[0] - math.hypot(local[0], local[1])
        dz = self.size[1] - abs(local[2])
        return float(min(dr, dz))


@dataclass(frozen=True, eq=False)
class SimState:
    q_actual: np.ndarray
    q_target: np.ndarray
    objects: tuple[SceneObject, ...]
    time: float = 0.0
    omega_max: float = DEFAULT_OMEGA_MAX


def step(state: SimState, command, dt: float) -> SimState:
    """Advance the joint servos one tick toward the commanded configuration."""
    if not 0.0 < dt <= 0.1:
        raise InvalidDt(f"dt {dt} outside (0, 0.1]")
    q_target = np.asarray(getattr(command, "q_robot", command), dtype=float)
    limit = state.omega_max * dt
    q_actual = state.q_actual + np.clip(q_target - state.q_actual, -limit, limit)
    return replace(state, q_actual=q_actual, q_target=q_target, time=state.time + dt)


def contact_forces(state: SimState, robot_model: HandModel, timestamp_ns: int = 0) -> list[ForceReading]:
    """One ForceReading per finger, FINGERS order, grams at 1 g resolution."""
    tips = forward_kinematics(robot_model, state.q_actual)
    readings = []
    for finger in FINGERS:
        force = 0.0
        if finger in tips:
            for obj in state.objects:
                depth = obj.penetration(tips[finger])
                if depth > 0.0:
                    force = max(force, obj.stiffness_k * depth)
        overrange = force > SENSOR_MAX_G
        grams = float(round(min(force, SENSOR_MAX_G)))
        readings.append(ForceReading(finger=finger, grams=grams, timestamp_ns=timestamp_ns, overrange=overrange))
    return readings


def _parse_object(raw: dict, index: int) -> SceneObject:
    try:
        object_id = raw["id"]
        kind = raw["shape"]
        params = raw["params"]
        k = float(raw["k"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"object {index}: missing field {exc}") from exc
    if kind not in SHAPES:
        raise ParseError(f"object {object_id!r}: unknown shape {kind!r}")
    try:
        if kind == "sphere":
            size = np.array([float(params["radius"])])
        elif kind == "box":
            size = np.asarray(params["half_extents"], dtype=float)
            if size.shape != (3,):
                raise ParseError(f"object {object_id!r}: box half_extents must be 3 values")
        else:
            size = np.array([float(params["radius"]), float(params["half_height"])])
    except KeyError as exc:
        raise ParseError(f"object {object_id!r}: missing shape parameter {exc}") from exc
    if np.any(size <= 0):
        raise ValidationError(f"object {object_id!r}: dimensions must be positive")
    if k <= 0:
        raise ValidationError(f"object {object_id!r}: stiffness k must be positive")
    pose = raw.get("pose", {})
    return SceneObject(
        object_id=object_id,
        kind=kind,
        size=size,
        rot=rpy_to_matrix(pose.get("rpy", [0.0, 0.0, 0.0])),
        pos=np.asarray(pose.get("xyz", [0.0, 0.0, 0.0]), dtype=float),
        stiffness_k=k,
        softness=raw.get("softness", ""),
    )


def scenario_load(document: str, robot_model: HandModel | None = None) -> SimState:
    """Parse a scenario JSON document into an initial SimState."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("scenario root must be an object")
    objects = tuple(_parse_object(raw, i) for i, raw in enumerate(doc.get("objects", [])))
    ids = [o.object_id for o in objects]
    dupes = {i for i in ids if ids.count(i) > 1}
    if dupes:
        raise ValidationError(f"duplicate object id(s): {sorted(dupes)}")

    initial_q = doc.get("initial_q")
    if initial_q is None:
        q = np.zeros(robot_model.dof_count if robot_model else 0)
    else:
        q = np.asarray(initial_q, dtype=float)
    if robot_model is not None:
        if q.shape != (robot_model.dof_count,):
            raise ValidationError(
                f"initial_q has length {q.shape[0] if q.ndim else 0}, model needs {robot_model.dof_count}"
            )
        q = clamp_to_limits(robot_model, q)
    omega = float(doc.get("omega_max", DEFAULT_OMEGA_MAX))
    if omega <= 0:
        raise ValidationError("omega_max must be positive")
    return SimState(q_actual=q, q_target=q.copy(), objects=objects, time=0.0, omega_max=omega)

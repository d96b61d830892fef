"""Kinematic-chain data model, forward kinematics, and fingertip Jacobians.

A hand is a rigid tree of links. Link 0 is the base (palm) and carries no
joint; every other link is attached to its parent through exactly one revolute
joint, so joint ``j`` drives link ``j + 1``. Two chained ``ball_component``
joints with orthogonal axes model a 2-DoF ball joint (flexion component first,
abduction component second).

Transform convention (see :mod:`dexlink.transforms`):

    T_link = T_parent @ T_origin @ R(axis, q)

where ``T_origin`` is the joint's fixed mounting transform in the parent link
frame. Fingertip frames are fixed offsets on a link.

Hand-description documents are JSON::

    {
      "name": "...",
      "links": [
        {"name": "palm", "parent": -1, "joint": null},
        {"name": "prox", "parent": 0,
         "joint": {"kind": "hinge", "axis": [0, 1, 0],
                   "origin": {"xyz": [0.08, 0, 0], "rpy": [0, 0, 0]},
                   "limits": [-0.3, 1.8]}},
        ...
      ],
      "fingertips": {"index": {"link": 3, "xyz": [0.02, 0, 0], "rpy": [0, 0, 0]}, ...}
    }

Models are immutable after load and safe to share across threads; every
operation here is a pure function of (model, q).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .transforms import rpy_to_matrix, skew

FINGERS = ("thumb", "index", "middle", "ring", "pinky")

JOINT_KINDS = ("hinge", "ball_component")

_UNIT_TOL = 1e-9
_ORTHO_TOL = 1e-9


class KinematicsError(Exception):
    """Base class for kinematics failures."""


class ParseError(KinematicsError):
    """Hand-description document is structurally malformed."""


class ValidationError(KinematicsError):
    """Document parsed but violates a model invariant."""


class DimensionMismatch(KinematicsError):
    """Joint vector length does not match the model."""


class UnknownFinger(KinematicsError):
    """Finger id absent from the model's fingertip frames."""


@dataclass(frozen=True, eq=False)
class JointSpec:
    name: str
    kind: str
    axis: np.ndarray
    origin_rot: np.ndarray
    origin_xyz: np.ndarray
    limits: tuple[float, float]


@dataclass(frozen=True, eq=False)
class Link:
    name: str
    parent: int
    joint: JointSpec | None


@dataclass(frozen=True, eq=False)
class FingertipFrame:
    link: int
    offset_rot: np.ndarray
    offset_xyz: np.ndarray


@dataclass(frozen=True, eq=False)
class HandModel:
    """Validated hand kinematic tree with precomputed per-joint arrays."""

    name: str
    links: tuple[Link, ...]
    fingertip_frames: dict[str, FingertipFrame]
    dof_count: int
    joint_names: tuple[str, ...] = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    # stacked per-joint constants (index j drives link j + 1)
    _parents: np.ndarray = field(repr=False)
    _axes: np.ndarray = field(repr=False)
    _skews: np.ndarray = field(repr=False)
    _skews2: np.ndarray = field(repr=False)
    _origin_rots: np.ndarray = field(repr=False)
    _origin_xyzs: np.ndarray = field(repr=False)
    # finger id -> ordered joint indices from base to fingertip link
    _chains: dict[str, np.ndarray] = field(repr=False)

    def joint_index(self, name: str) -> int:
        return self.joint_names.index(name)

    def finger_chain(self, finger: str) -> np.ndarray:
        if finger not in self._chains:
            raise UnknownFinger(f"model {self.name!r} has no finger {finger!r}")
        return self._chains[finger]

    def finger_reach(self, finger: str) -> float:
        """Upper bound on fingertip distance from base: sum of offsets along the chain."""
        chain = self.finger_chain(finger)
        tip = self.fingertip_frames[finger]
        reach = float(np.linalg.norm(tip.offset_xyz))
        for j in chain:
            reach += float(np.linalg.norm(self._origin_xyzs[j]))
        return reach


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


def _parse_transform(obj, where: str):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: origin must be an object with xyz/rpy")
    xyz = np.asarray(obj.get("xyz", [0.0, 0.0, 0.0]), dtype=float)
    rpy = np.asarray(obj.get("rpy", [0.0, 0.0, 0.0]), dtype=float)
    if xyz.shape != (3,) or rpy.shape != (3,):
        raise ParseError(f"{where}: xyz and rpy must be length-3 arrays")
    return rpy_to_matrix(rpy), xyz


def _parse_joint(obj, link_name: str) -> JointSpec:
    try:
        kind = obj["kind"]
        axis = np.asarray(obj["axis"], dtype=float)
        limits = obj["limits"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"link {link_name!r}: joint missing field {exc}") from exc
    if kind not in JOINT_KINDS:
        raise ParseError(f"link {link_name!r}: unknown joint kind {kind!r}")
    if axis.shape != (3,):
        raise ParseError(f"link {link_name!r}: joint axis must be a 3-vector")
    origin_rot, origin_xyz = _parse_transform(obj.get("origin", {}), f"link {link_name!r}")
    name = obj.get("name", f"{link_name}_joint")
    lo, hi = float(limits[0]), float(limits[1])

    _require(abs(np.linalg.norm(axis) - 1.0) < _UNIT_TOL, f"joint {name!r}: axis is not unit length")
    _require(lo <= hi, f"joint {name!r}: limits min > max")
    return JointSpec(name=name, kind=kind, axis=axis, origin_rot=origin_rot, origin_xyz=origin_xyz, limits=(lo, hi))


def _validate_ball_pairs(links: tuple[Link, ...]) -> None:
    """Every ball_component must pair with exactly one directly-chained ball_component,
    and the pair's axes must be orthogonal (child axis compared in the parent joint frame)."""
    ball_links = [i for i, lk in enumerate(links) if lk.joint is not None and lk.joint.kind == "ball_component"]
    children: dict[int, list[int]] = {i: [] for i in ball_links}
    partners: dict[int, list[int]] = {i: [] for i in ball_links}
    for i in ball_links:
        parent = links[i].parent
        if parent in children:
            children[parent].append(i)
            partners[parent].append(i)
            partners[i].append(parent)
    for i in ball_links:
        joint = links[i].joint
        _require(
            len(partners[i]) == 1,
            f"joint {joint.name!r}: ball_component must chain with exactly one ball_component "
            f"(found {len(partners[i])})",
        )
    for i in ball_links:
        for c in children[i]:
            parent_axis = links[i].joint.axis
            child = links[c].joint
            child_axis_in_parent = child.origin_rot @ child.axis
            dot = abs(float(parent_axis @ child_axis_in_parent))
            _require(dot < _ORTHO_TOL, f"joint {child.name!r}: ball pair axes not orthogonal (|dot| = {dot:.3g})")


def load_hand_model(document: str) -> HandModel:
    """Parse and validate a hand-description document (JSON text).

    Raises ParseError on malformed documents and ValidationError on invariant
    violations; validation messages name the offending joint or link.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("document root must be an object")
    try:
        name = doc["name"]
        raw_links = doc["links"]
    except KeyError as exc:
        raise ParseError(f"missing top-level field {exc}") from exc
    if not isinstance(raw_links, list) or not raw_links:
        raise ParseError("links must be a non-empty list")

    links: list[Link] = []
    seen_names: set[str] = set()
    for i, raw in enumerate(raw_links):
        if not isinstance(raw, dict) or "name" not in raw:
            raise ParseError(f"link {i}: must be an object with a name")
        link_name = raw["name"]
        _require(link_name not in seen_names, f"link {link_name!r}: duplicate link name")
        seen_names.add(link_name)
        parent = raw.get("parent", -1)
        parent = -1 if parent is None else int(parent)
        joint_obj = raw.get("joint")
        if i == 0:
            _require(parent == -1, f"link {link_name!r}: base link must have parent -1")
            _require(joint_obj is None, f"link {link_name!r}: base link must not carry a joint")
            links.append(Link(name=link_name, parent=-1, joint=None))
            continue
        # parent must be an already-declared link: rejects cycles and forward refs
        _require(0 <= parent < i, f"link {link_name!r}: parent index {parent} missing or out of order")
        _require(joint_obj is not None, f"link {link_name!r}: non-base link must carry a joint")
        links.append(Link(name=link_name, parent=parent, joint=_parse_joint(joint_obj, link_name)))

    links_t = tuple(links)
    _validate_ball_pairs(links_t)

    fingertips_raw = doc.get("fingertips", {})
    if not isinstance(fingertips_raw, dict):
        raise ParseError("fingertips must be an object keyed by finger id")
    fingertip_frames: dict[str, FingertipFrame] = {}
    for finger, raw in fingertips_raw.items():
        _require(finger in FINGERS, f"fingertip {finger!r}: unknown finger id")
        try:
            link_idx = int(raw["link"])
        except (KeyError, TypeError) as exc:
            raise ParseError(f"fingertip {finger!r}: missing link index") from exc
        _require(0 <= link_idx < len(links_t), f"fingertip {finger!r}: link index {link_idx} out of range")
        rot, xyz = _parse_transform(
            {"xyz": raw.get("xyz", [0, 0, 0]), "rpy": raw.get("rpy", [0, 0, 0])}, f"fingertip {finger!r}"
        )
        fingertip_frames[finger] = FingertipFrame(link=link_idx, offset_rot=rot, offset_xyz=xyz)

    n_joints = len(links_t) - 1
    joint_names = tuple(lk.joint.name for lk in links_t[1:])
    _require(len(set(joint_names)) == n_joints, f"model {name!r}: duplicate joint names")

    axes = np.stack([lk.joint.axis for lk in links_t[1:]]) if n_joints else np.zeros((0, 3))
    skews = np.stack([skew(a) for a in axes]) if n_joints else np.zeros((0, 3, 3))
    model = HandModel(
        name=name,
        links=links_t,
        fingertip_frames=fingertip_frames,
        dof_count=n_joints,
        joint_names=joint_names,
        lower=np.array([lk.joint.limits[0] for lk in links_t[1:]]),
        upper=np.array([lk.joint.limits[1] for lk in links_t[1:]]),
        _parents=np.array([lk.parent for lk in links_t[1:]], dtype=int),
        _axes=axes,
        _skews=skews,
        _skews2=np.stack([k @ k for k in skews]) if n_joints else np.zeros((0, 3, 3)),
        _origin_rots=np.stack([lk.joint.origin_rot for lk in links_t[1:]]) if n_joints else np.zeros((0, 3, 3)),
        _origin_xyzs=np.stack([lk.joint.origin_xyz for lk in links_t[1:]]) if n_joints else np.zeros((0, 3)),
        _chains={finger: _chain_to(links_t, frame.link) for finger, frame in fingertip_frames.items()},
    )
    return model


def load_hand_model_file(path) -> HandModel:
    with open(path, "r", encoding="utf-8") as fh:
        return load_hand_model(fh.read())


def _chain_to(links: tuple[Link, ...], link_idx: int) -> np.ndarray:
    chain = []
    i = link_idx
    while i > 0:
        chain.append(i - 1)  # joint j drives link j + 1
        i = links[i].parent
    return np.array(chain[::-1], dtype=int)


def check_joint_vector(model: HandModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (model.dof_count,):
        raise DimensionMismatch(
            f"joint vector has shape {q.shape}, model {model.name!r} expects ({model.dof_count},)"
        )
    if not np.all(np.isfinite(q)):
        raise DimensionMismatch("joint vector contains non-finite values")
    return q


def link_poses(model: HandModel, q) -> tuple[np.ndarray, np.ndarray]:
    """World rotation (n,3,3) and position (n,3) of every link frame at q."""
    q = check_joint_vector(model, q)
    n = len(model.links)
    rots = np.empty((n, 3, 3))
    poss = np.empty((n, 3))
    rots[0] = np.eye(3)
    poss[0] = 0.0
    parents = model._parents
    # all joint rotations in one vectorized Rodrigues pass
    sins = np.sin(q)
    coss = np.cos(q)
    joint_rots = np.eye(3) + sins[:, None, None] * model._skews + (1.0 - coss)[:, None, None] * model._skews2
    local_rots = model._origin_rots @ joint_rots
    for j in range(model.dof_count):
        parent = parents[j]
        poss[j + 1] = poss[parent] + rots[parent] @ model._origin_xyzs[j]
        rots[j + 1] = rots[parent] @ local_rots[j]
    return rots, poss


def fk_with_jacobians(model: HandModel, q, fingers=None, want_jacobian: bool = True):
    """Fingertip positions and 3xdof Jacobians for the requested fingers in one pass.

    Returns (tips, jacs) where tips maps finger id -> world position and jacs
    maps finger id -> matrix whose column j is d tip / d q_j (zero off-chain).
    """
    rots, poss = link_poses(model, q)
    if fingers is None:
        fingers = model.fingertip_frames.keys()
    tips: dict[str, np.ndarray] = {}
    jacs: dict[str, np.ndarray] = {}
    for finger in fingers:
        if finger not in model.fingertip_frames:
            raise UnknownFinger(f"model {model.name!r} has no finger {finger!r}")
        frame = model.fingertip_frames[finger]
        tip = poss[frame.link] + rots[frame.link] @ frame.offset_xyz
        tips[finger] = tip
        if not want_jacobian:
            continue
        jac = np.zeros((3, model.dof_count))
        chain = model._chains[finger]
        # rotation about the joint axis leaves the axis itself invariant,
        # so each driven link's frame gives the world axis directly
        axes_world = np.einsum("nij,nj->ni", rots[chain + 1], model._axes[chain])
        jac[:, chain] = np.cross(axes_world, tip[None, :] - poss[chain + 1]).T
        jacs[finger] = jac
    return tips, jacs


def forward_kinematics(model: HandModel, q) -> dict[str, np.ndarray]:
    """Fingertip positions (meters, base frame) keyed by finger id."""
    tips, _ = fk_with_jacobians(model, q, want_jacobian=False)
    return tips


def fingertip_jacobian(model: HandModel, q, finger: str) -> np.ndarray:
    """3 x dof position Jacobian of one fingertip."""
    if finger not in model.fingertip_frames:
        raise UnknownFinger(f"model {model.name!r} has no finger {finger!r}")
    _, jacs = fk_with_jacobians(model, q, fingers=(finger,))
    return jacs[finger]


def clamp_to_limits(model: HandModel, q) -> np.ndarray:
    """Componentwise clamp into joint limits; idempotent."""
    q = check_joint_vector(model, q)
    return np.clip(q, model.lower, model.upper)


def finger_polyline(model: HandModel, q, finger: str) -> np.ndarray:
    """Joint positions from base to fingertip, for rendering a skeleton."""
    rots, poss = link_poses(model, q)
    if finger not in model.fingertip_frames:
        raise UnknownFinger(f"model {model.name!r} has no finger {finger!r}")
    frame = model.fingertip_frames[finger]
    chain = model._chains[finger]
    points = [poss[0]]
    points.extend(poss[j + 1] for j in chain)
    points.append(poss[frame.link] + rots[frame.link] @ frame.offset_xyz)
    return np.stack(points)

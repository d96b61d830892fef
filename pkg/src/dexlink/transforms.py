"""Minimal SO(3)/SE(3) helpers shared by the kinematics and sim modules.

Conventions used everywhere in this package:
  - rotations are 3x3 matrices, translations 3-vectors, lengths in meters
  - rpy = (roll, pitch, yaw) applied as R = Rz(yaw) @ Ry(pitch) @ Rx(roll)
  - rigid transforms compose parent-to-child
"""

from __future__ import annotations

import math

import numpy as np

IDENTITY_ROT = np.eye(3)


def rpy_to_matrix(rpy) -> np.ndarray:
    """Rotation matrix for roll/pitch/yaw angles (radians)."""
    r, p, y = float(rpy[0]), float(rpy[1]), float(rpy[2])
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(v) @ u == v x u."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def axis_angle_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    k = skew(axis)
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def compose(rot_a: np.ndarray, pos_a: np.ndarray, rot_b: np.ndarray, pos_b: np.ndarray):
    """Compose transform A (outer) with B (inner): returns A @ B."""
    return rot_a @ rot_b, pos_a + rot_a @ pos_b


def apply(rot: np.ndarray, pos: np.ndarray, point: np.ndarray) -> np.ndarray:
    return rot @ point + pos


def invert(rot: np.ndarray, pos: np.ndarray):
    rt = rot.T
    return rt, -(rt @ pos)

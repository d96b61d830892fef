"""Canned glove poses: open hand, bottle grasp, thumb-index pinch.

Values are radians on the bundled 21-DoF glove. The grasp pose is tuned so
that, retargeted onto the bundled robot hand inside the grasp_bottle scene,
the fingertip forces settle in the haptic+force band without crossing into
force-only territory.
"""

from __future__ import annotations

import numpy as np

from .glove import PoseScript
from .kinematics import HandModel

# joint name -> radians; unlisted joints are zero
GRASP_POSE = {
    "index_mcp_b": 0.527,
    "index_pip": 0.527,
    "index_dip": 0.34,
    "middle_mcp_b": 0.527,
    "middle_pip": 0.527,
    "middle_dip": 0.34,
    "ring_mcp_b": 0.527,
    "ring_pip": 0.527,
    "ring_dip": 0.34,
    "pinky_mcp_b": 0.527,
    "pinky_pip": 0.527,
    "pinky_dip": 0.34,
    "thumb_tm_b": 0.3825,
    "thumb_mcp": 0.2975,
}

PINCH_POSE = {
    "thumb_wrist_ps": -0.4652,
    "thumb_tm_b": 0.5953,
    "thumb_tm_s": -0.5584,
    "thumb_mcp": -0.2825,
    "thumb_ip": -0.2653,
    "index_mcp_b": 0.7117,
    "index_pip": 0.4233,
    "index_dip": 0.3780,
    "middle_mcp_b": 0.4313,
    "middle_pip": 0.5880,
    "ring_mcp_b": 0.4880,
    "ring_pip": 0.1091,
    "pinky_mcp_b": 0.8179,
    "pinky_pip": 0.0155,
}


def pose_vector(model: HandModel, named: dict[str, float]) -> np.ndarray:
    q = np.zeros(model.dof_count)
    for name, value in named.items():
        q[model.joint_index(name)] = value
    return q


def open_pose(model: HandModel) -> np.ndarray:
    return np.zeros(model.dof_count)


def grasp_pose(model: HandModel) -> np.ndarray:
    return pose_vector(model, GRASP_POSE)


def pinch_pose(model: HandModel) -> np.ndarray:
    return pose_vector(model, PINCH_POSE)


def closing_script(model: HandModel, duration_s: float = 10.0, end_behavior: str = "hold") -> PoseScript:
    """Open hand ramping into the grasp pose over 80 % of the duration."""
    q_open = open_pose(model)
    q_grasp = grasp_pose(model)
    times = np.array([0.0, 0.8 * duration_s, duration_s])
    poses = np.stack([q_open, q_grasp, q_grasp])
    return PoseScript(times, poses, end_behavior=end_behavior)

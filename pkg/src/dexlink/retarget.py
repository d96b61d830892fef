"""Fingertip action retargeting: glove FK -> scaled targets -> damped-least-
squares IK on the robot hand.

The solver iterates dq = J^T (J J^T + lambda^2 I)^-1 e on the stacked,
per-finger-weighted fingertip position error. Each iterate is clamped to the
robot's joint limits and confined to a step_limit box around the warm-start
configuration, which is what rate-limits successive teleop commands. The
returned configuration is the best iterate visited (smallest max per-finger
residual; earliest wins ties), so unreachable targets degrade gracefully
instead of erroring.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .glove import GloveJointState
from .kinematics import (
    FINGERS,
    HandModel,
    UnknownFinger,
    check_joint_vector,
    clamp_to_limits,
    fk_with_jacobians,
    forward_kinematics,
)


class RetargetError(Exception):
    pass


class NonFiniteTarget(RetargetError):
    pass


def default_finger_weights() -> dict[str, float]:
    # thumb accuracy dominates pinch quality
    return {"thumb": 2.0, "index": 1.0, "middle": 1.0, "ring": 1.0, "pinky": 1.0}


@dataclass(frozen=True)
class RetargetConfig:
    # defaults are the teleop-loop settings: step_limit rate-limits each call
    # and max_iters keeps one warm-started call well inside the tick budget
    scale: float = 1.3
    damping: float = 1e-2
    step_limit: float = 0.15
    max_iters: int = 20
    pos_tolerance: float = 5e-4
    finger_weights: dict[str, float] = field(default_factory=default_finger_weights)
    origin_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.scale <= 0 or self.damping <= 0 or self.pos_tolerance <= 0 or self.step_limit <= 0:
            raise ValueError("scale, damping, step_limit, and pos_tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if any(w <= 0 for w in self.finger_weights.values()):
            raise ValueError("finger weights must be positive")


@dataclass(frozen=True, eq=False)
class RobotCommand:
    q_robot: np.ndarray
    residuals: dict[str, float]
    iterations_used: int
    timestamp_ns: int = 0


def glove_fingertips(glove_model: HandModel, state: GloveJointState) -> dict[str, np.ndarray]:
    """Fingertip positions of the glove pose, in the glove base frame."""
    return forward_kinematics(glove_model, state.q)


def scale_targets(
    tips: dict[str, np.ndarray], config: RetargetConfig, robot_origin_offset=(0.0, 0.0, 0.0)
) -> dict[str, np.ndarray]:
    """Uniformly scale fingertip positions and shift them into the robot frame."""
    offset = np.asarray(robot_origin_offset, dtype=float)
    return {finger: config.scale * pos + offset for finger, pos in tips.items()}


def solve_ik(
    robot_model: HandModel,
    q_current,
    targets: dict[str, np.ndarray],
    config: RetargetConfig,
    timestamp_ns: int = 0,
) -> RobotCommand:
    """Damped-least-squares fingertip IK, warm-started at q_current.

    If the warm start stalls, the remaining iteration budget is spent on a
    fixed schedule of fallback seeds (mid-range and quarter-range poses, all
    projected into the step-limit box), which rescues configurations where
    plain DLS parks a redundant chain against its limits. Fully deterministic.
    """
    q_start = clamp_to_limits(robot_model, check_joint_vector(robot_model, q_current))
    fingers = [f for f in FINGERS if f in targets]
    for finger in fingers:
        if finger not in robot_model.fingertip_frames:
            raise UnknownFinger(f"target for {finger!r} but model {robot_model.name!r} lacks it")
        if not np.all(np.isfinite(targets[finger])):
            raise NonFiniteTarget(f"target for {finger!r} is not finite")

    weights = np.repeat([config.finger_weights.get(f, 1.0) for f in fingers], 3)
    goal = np.concatenate([np.asarray(targets[f], dtype=float) for f in fingers])
    lam2 = config.damping * config.damping
    box_lo = q_start - config.step_limit
    box_hi = q_start + config.step_limit

    span = robot_model.upper - robot_model.lower
    seeds = [
        q_start,
        robot_model.lower + 0.5 * span,
        robot_model.lower + 0.75 * span,
        robot_model.lower + 0.25 * span,
    ]
    per_seed = max(1, config.max_iters // len(seeds))

    best_q = q_start
    best_res = np.inf
    iterations = 0
    for seed in seeds:
        q = clamp_to_limits(robot_model, np.clip(seed, box_lo, box_hi))
        seed_iters = 0
        while True:
            tips, jacs = fk_with_jacobians(robot_model, q, fingers)
            err = goal - np.concatenate([tips[f] for f in fingers])
            max_res = max(
                float(np.linalg.norm(err[3 * i : 3 * i + 3])) for i in range(len(fingers))
            )
            if max_res < best_res:
                best_res = max_res
                best_q = q
            if best_res <= config.pos_tolerance or iterations >= config.max_iters or seed_iters >= per_seed:
                break
            jac = np.concatenate([jacs[f] for f in fingers], axis=0) * weights[:, None]
            werr = err * weights
            gram = jac @ jac.T
            gram[np.diag_indices_from(gram)] += lam2
            dq = jac.T @ np.linalg.solve(gram, werr)
            worst = np.max(np.abs(dq))
            if worst > config.step_limit:
                dq = dq * (config.step_limit / worst)
            q = clamp_to_limits(robot_model, np.clip(q + dq, box_lo, box_hi))
            iterations += 1
            seed_iters += 1
        if best_res <= config.pos_tolerance or iterations >= config.max_iters:
            break

    final_tips = forward_kinematics(robot_model, best_q)
    residuals = {
        f: float(np.linalg.norm(np.asarray(targets[f], dtype=float) - final_tips[f])) for f in fingers
    }
    return RobotCommand(
        q_robot=best_q, residuals=residuals, iterations_used=iterations, timestamp_ns=timestamp_ns
    )


def retarget_step(
    glove_model: HandModel,
    robot_model: HandModel,
    state: GloveJointState,
    q_prev,
    config: RetargetConfig,
) -> RobotCommand:
    """One control-tick retarget: glove FK, scaling, warm-started IK."""
    tips = glove_fingertips(glove_model, state)
    targets = scale_targets(tips, config, config.origin_offset)
    return solve_ik(robot_model, q_prev, targets, config, timestamp_ns=state.timestamp_ns)

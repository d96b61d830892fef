#!/usr/bin/env python3
"""IK solve-quality experiment on the bundled 16-DoF hand.

Generates reachable fingertip target sets by forward kinematics of random
in-limits configurations, solves each from a cold start, and reports the
residual distribution, iteration counts, and wall time per solve.
"""

import argparse
import time

import numpy as np

from dexlink import bundled_model_text
from dexlink.kinematics import forward_kinematics, load_hand_model
from dexlink.retarget import RetargetConfig, solve_ik


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--targets", type=int, default=500)
    parser.add_argument("--seed", type=int, default=6)
    parser.add_argument("--max-iters", type=int, default=100)
    parser.add_argument("--tolerance-mm", type=float, default=1.0)
    args = parser.parse_args()

    robot = load_hand_model(bundled_model_text("leaphand16"))
    cfg = RetargetConfig(step_limit=3.0, max_iters=args.max_iters, pos_tolerance=5e-4)
    rng = np.random.default_rng(args.seed)

    residuals = []
    iters = []
    t0 = time.perf_counter()
    for _ in range(args.targets):
        q_goal = robot.lower + (robot.upper - robot.lower) * rng.random(robot.dof_count)
        targets = forward_kinematics(robot, q_goal)
        cmd = solve_ik(robot, np.zeros(robot.dof_count), targets, cfg)
        residuals.append(max(cmd.residuals.values()))
        iters.append(cmd.iterations_used)
    elapsed = time.perf_counter() - t0

    residuals_mm = np.array(residuals) * 1000.0
    solved = float(np.mean(residuals_mm <= args.tolerance_mm))
    print(f"targets: {args.targets}, budget {args.max_iters} iterations")
    print(f"solved to {args.tolerance_mm} mm: {100 * solved:.1f}%")
    print(f"residual mm: p50 {np.percentile(residuals_mm, 50):.4f}  "
          f"p95 {np.percentile(residuals_mm, 95):.3f}  max {residuals_mm.max():.2f}")
    print(f"iterations:  p50 {np.percentile(iters, 50):.0f}  p95 {np.percentile(iters, 95):.0f}")
    print(f"time per solve: {1e3 * elapsed / args.targets:.2f} ms")


if __name__ == "__main__":
    main()

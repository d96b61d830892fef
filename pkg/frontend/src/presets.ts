// Canned glove poses in the bundled glove's joint order (21 entries):
//  0..4   thumb: wrist_ps, tm_b, tm_s, mcp, ip
//  5..8   index: mcp_b, mcp_s, pip, dip
//  9..12  middle, 13..16 ring, 17..20 pinky (same per-finger layout)
// Values mirror the daemon's bundled presets.

export const GLOVE_DOF = 21;

export const OPEN_POSE: number[] = new Array(GLOVE_DOF).fill(0);

export const GRASP_POSE: number[] = [
  0, 0.3825, 0, 0.2975, 0,
  0.527, 0, 0.527, 0.34,
  0.527, 0, 0.527, 0.34,
  0.527, 0, 0.527, 0.34,
  0.527, 0, 0.527, 0.34,
];

export const PINCH_POSE: number[] = [
  -0.4652, 0.5953, -0.5584, -0.2825, -0.2653,
  0.7117, 0, 0.4233, 0.378,
  0.4313, 0, 0.588, 0,
  0.488, 0, 0.1091, 0,
  0.8179, 0, 0.0155, 0,
];

export const PRESETS: Record<string, number[]> = {
  open: OPEN_POSE,
  grasp: GRASP_POSE,
  pinch: PINCH_POSE,
};

/** Pose along the open -> grasp sweep; amount in [0, 1]. */
export function closePose(amount: number): number[] {
  const u = Math.min(1, Math.max(0, amount));
  return GRASP_POSE.map((v, i) => OPEN_POSE[i] + u * (v - OPEN_POSE[i]));
}

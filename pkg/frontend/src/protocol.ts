// Message types and validation for the daemon's WebSocket protocol
// (documented in ../docs/protocol.md). The console renders nothing that has
// not passed validateMessage.

export const FINGERS = ["thumb", "index", "middle", "ring", "pinky"] as const;
export type Finger = (typeof FINGERS)[number];

export const FEEDBACK_CLASSES = ["none", "haptic", "haptic_force", "force"] as const;
export type FeedbackClass = (typeof FEEDBACK_CLASSES)[number];

export interface Hello {
  type: "hello";
  glove_dof: number;
  robot_dof: number;
  fingers: string[];
  config_hash: string;
  scenario: string;
  control_rate: number;
}

export interface Snapshot {
  type: "snapshot";
  t: number;
  tick: number;
  glove_q: number[];
  robot_q: number[];
  forces: number[];
  feedback: FeedbackClass[];
  residuals: number[];
  glove_points: Record<string, number[][]>;
  robot_points: Record<string, number[][]>;
  config_hash: string;
  scenario: string;
}

export interface ErrorMsg {
  type: "error";
  reason: string;
}

export type ServerMessage = Hello | Snapshot | ErrorMsg;

function isNumberArray(v: unknown, length?: number): v is number[] {
  return (
    Array.isArray(v) &&
    (length === undefined || v.length === length) &&
    v.every((x) => typeof x === "number" && Number.isFinite(x))
  );
}

function isPointMap(v: unknown): v is Record<string, number[][]> {
  if (typeof v !== "object" || v === null) return false;
  return Object.values(v).every(
    (line) => Array.isArray(line) && line.length >= 2 && line.every((p) => isNumberArray(p, 3)),
  );
}

export function validateMessage(raw: unknown, gloveDof?: number, robotDof?: number): ServerMessage | null {
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "hello": {
      if (
        typeof msg.glove_dof === "number" &&
        typeof msg.robot_dof === "number" &&
        Array.isArray(msg.fingers) &&
        typeof msg.config_hash === "string" &&
        typeof msg.control_rate === "number"
      ) {
        return msg as unknown as Hello;
      }
      return null;
    }
    case "snapshot": {
      if (
        typeof msg.t === "number" &&
        typeof msg.tick === "number" &&
        isNumberArray(msg.glove_q, gloveDof) &&
        isNumberArray(msg.robot_q, robotDof) &&
        isNumberArray(msg.forces, 5) &&
        Array.isArray(msg.feedback) &&
        msg.feedback.length === 5 &&
        msg.feedback.every((c) => (FEEDBACK_CLASSES as readonly string[]).includes(c as string)) &&
        isNumberArray(msg.residuals, 5) &&
        isPointMap(msg.glove_points) &&
        isPointMap(msg.robot_points) &&
        typeof msg.config_hash === "string"
      ) {
        return msg as unknown as Snapshot;
      }
      return null;
    }
    case "error": {
      return typeof msg.reason === "string" ? (msg as unknown as ErrorMsg) : null;
    }
    default:
      return null;
  }
}

export function parseServerMessage(data: string, gloveDof?: number, robotDof?: number): ServerMessage | null {
  try {
    return validateMessage(JSON.parse(data), gloveDof, robotDof);
  } catch {
    return null;
  }
}

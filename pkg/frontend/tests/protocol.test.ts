import { describe, expect, it } from "vitest";

import { parseServerMessage, validateMessage } from "../src/protocol.js";

const points = {
  thumb: [[0, 0, 0], [0.1, 0, 0]],
  index: [[0, 0, 0], [0.1, 0.02, 0]],
};

function snapshot(overrides: Record<string, unknown> = {}) {
  return {
    type: "snapshot",
    t: 1.25,
    tick: 37,
    glove_q: new Array(21).fill(0),
    robot_q: new Array(16).fill(0),
    forces: [0, 10, 50, 100, 3000],
    feedback: ["none", "haptic", "haptic_force", "force", "none"],
    residuals: [0, 0, 0, 0, 0],
    glove_points: points,
    robot_points: points,
    config_hash: "abc",
    scenario: "grasp_bottle",
    ...overrides,
  };
}

describe("snapshot validation", () => {
  it("accepts a well-formed snapshot", () => {
    expect(validateMessage(snapshot(), 21, 16)).not.toBeNull();
  });

  it("rejects wrong glove_q length once hello pinned the dof", () => {
    expect(validateMessage(snapshot({ glove_q: new Array(20).fill(0) }), 21, 16)).toBeNull();
  });

  it("accepts any consistent length before hello arrives", () => {
    expect(validateMessage(snapshot())).not.toBeNull();
  });

  it("rejects unknown feedback classes", () => {
    expect(validateMessage(snapshot({ feedback: ["none", "buzz", "none", "none", "none"] }))).toBeNull();
  });

  it("rejects non-finite forces", () => {
    expect(validateMessage(snapshot({ forces: [0, 1, 2, 3, Number.NaN] }))).toBeNull();
  });

  it("rejects truncated point polylines", () => {
    expect(validateMessage(snapshot({ glove_points: { thumb: [[0, 0, 0]] } }))).toBeNull();
  });

  it("rejects snapshots missing the config hash", () => {
    expect(validateMessage(snapshot({ config_hash: undefined }))).toBeNull();
  });
});

describe("message parsing", () => {
  it("parses hello", () => {
    const hello = {
      type: "hello",
      glove_dof: 21,
      robot_dof: 16,
      fingers: ["thumb", "index", "middle", "ring", "pinky"],
      config_hash: "abc",
      scenario: "grasp_bottle",
      control_rate: 30,
    };
    const parsed = parseServerMessage(JSON.stringify(hello));
    expect(parsed?.type).toBe("hello");
  });

  it("parses error replies", () => {
    const parsed = parseServerMessage(JSON.stringify({ type: "error", reason: "dimension mismatch" }));
    expect(parsed).toEqual({ type: "error", reason: "dimension mismatch" });
  });

  it("returns null for garbage", () => {
    expect(parseServerMessage("{not json")).toBeNull();
    expect(parseServerMessage(JSON.stringify(["array"]))).toBeNull();
    expect(parseServerMessage(JSON.stringify({ type: "launch" }))).toBeNull();
  });
});

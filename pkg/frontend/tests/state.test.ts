import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { handleMessage, initialState, setPose, setSlider, Throttle } from "../src/state.js";

const HELLO = JSON.stringify({
  type: "hello",
  glove_dof: 21,
  robot_dof: 16,
  fingers: ["thumb", "index", "middle", "ring", "pinky"],
  config_hash: "abc",
  scenario: "grasp_bottle",
  control_rate: 30,
});

const points = { thumb: [[0, 0, 0], [0.1, 0, 0]] };

function snapshotMsg(tick = 1) {
  return JSON.stringify({
    type: "snapshot",
    t: tick / 30,
    tick,
    glove_q: new Array(21).fill(0),
    robot_q: new Array(16).fill(0),
    forces: [0, 0, 0, 0, 0],
    feedback: ["none", "none", "none", "none", "none"],
    residuals: [0, 0, 0, 0, 0],
    glove_points: points,
    robot_points: points,
    config_hash: "abc",
    scenario: "grasp_bottle",
  });
}

describe("console state", () => {
  it("stores hello then validates snapshots against its dofs", () => {
    const state = initialState();
    expect(handleMessage(state, HELLO).kind).toBe("hello");
    expect(state.hello?.glove_dof).toBe(21);
    expect(handleMessage(state, snapshotMsg()).kind).toBe("snapshot");
    expect(state.snapshot?.tick).toBe(1);
  });

  it("counts invalid messages without touching the snapshot", () => {
    const state = initialState();
    handleMessage(state, HELLO);
    handleMessage(state, snapshotMsg(5));
    const before = state.snapshot;
    expect(handleMessage(state, "{bad json").kind).toBe("invalid");
    const wrongLength = JSON.parse(snapshotMsg(6));
    wrongLength.glove_q = new Array(20).fill(0);
    expect(handleMessage(state, JSON.stringify(wrongLength)).kind).toBe("invalid");
    expect(state.snapshot).toBe(before);
    expect(state.invalidMessages).toBe(2);
  });

  it("surfaces error replies", () => {
    const state = initialState();
    const event = handleMessage(state, JSON.stringify({ type: "error", reason: "nope" }));
    expect(event.kind).toBe("error");
    expect(state.lastError).toBe("nope");
  });

  it("slider edits mark a pending send and reject bad input", () => {
    const state = initialState();
    setSlider(state, 3, 0.5);
    expect(state.sliders[3]).toBe(0.5);
    expect(state.pendingSend).toBe(true);
    setSlider(state, 99, 1.0);
    setSlider(state, 2, Number.NaN);
    expect(state.sliders).toHaveLength(21);
    expect(state.sliders[2]).toBe(0);
  });

  it("setPose replaces the whole vector only when lengths match", () => {
    const state = initialState();
    setPose(state, new Array(21).fill(0.1));
    expect(state.sliders[20]).toBe(0.1);
    setPose(state, [1, 2, 3]);
    expect(state.sliders[20]).toBe(0.1);
  });
});

describe("throttle", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("fires at most once per period with the latest value", () => {
    const calls: number[] = [];
    const throttle = new Throttle(100, () => Date.now());
    throttle.call(() => calls.push(1)); // immediate
    throttle.call(() => calls.push(2)); // queued
    throttle.call(() => calls.push(3)); // replaces 2
    expect(calls).toEqual([1]);
    vi.advanceTimersByTime(101);
    expect(calls).toEqual([1, 3]);
    vi.advanceTimersByTime(200);
    throttle.call(() => calls.push(4)); // period elapsed: immediate again
    expect(calls).toEqual([1, 3, 4]);
  });
});

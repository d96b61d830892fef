// Console state: the latest validated snapshot, pending slider values, and
// connection bookkeeping. State changes only through these functions, driven
// by validated server messages and user input.

import type { ConnectionStatus } from "./connection.js";
import { GLOVE_DOF } from "./presets.js";
import { parseServerMessage, type Hello, type Snapshot } from "./protocol.js";

export interface ConsoleState {
  status: ConnectionStatus;
  hello: Hello | null;
  snapshot: Snapshot | null;
  sliders: number[];
  pendingSend: boolean;
  lastError: string | null;
  invalidMessages: number;
}

export function initialState(): ConsoleState {
  return {
    status: "closed",
    hello: null,
    snapshot: null,
    sliders: new Array(GLOVE_DOF).fill(0),
    pendingSend: false,
    lastError: null,
    invalidMessages: 0,
  };
}

export type StateEvent =
  | { kind: "snapshot"; snapshot: Snapshot }
  | { kind: "hello"; hello: Hello }
  | { kind: "error"; reason: string }
  | { kind: "invalid" };

/** Feed one raw wire message; mutates state and describes what happened. */
export function handleMessage(state: ConsoleState, data: string): StateEvent {
  const msg = parseServerMessage(data, state.hello?.glove_dof, state.hello?.robot_dof);
  if (msg === null) {
    state.invalidMessages += 1;
    return { kind: "invalid" };
  }
  switch (msg.type) {
    case "hello":
      state.hello = msg;
      if (msg.glove_dof !== state.sliders.length) {
        state.sliders = new Array(msg.glove_dof).fill(0);
      }
      return { kind: "hello", hello: msg };
    case "snapshot":
      state.snapshot = msg;
      return { kind: "snapshot", snapshot: msg };
    case "error":
      state.lastError = msg.reason;
      return { kind: "error", reason: msg.reason };
  }
}

export function setSlider(state: ConsoleState, index: number, value: number): void {
  if (index < 0 || index >= state.sliders.length || !Number.isFinite(value)) return;
  state.sliders[index] = value;
  state.pendingSend = true;
}

export function setPose(state: ConsoleState, pose: number[]): void {
  if (pose.length !== state.sliders.length) return;
  state.sliders = pose.slice();
  state.pendingSend = true;
}

/** Rate limiter: fires `send` with the latest value at most once per period. */
export class Throttle {
  private last = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pending: (() => void) | null = null;

  constructor(private periodMs: number, private now: () => number = () => Date.now()) {}

  setPeriod(periodMs: number): void {
    this.periodMs = periodMs;
  }

  call(fn: () => void): void {
    const elapsed = this.now() - this.last;
    if (elapsed >= this.periodMs) {
      this.last = this.now();
      fn();
      return;
    }
    this.pending = fn;
    if (this.timer === null) {
      this.timer = setTimeout(() => {
        this.timer = null;
        const fn2 = this.pending;
        this.pending = null;
        if (fn2 !== null) {
          this.last = this.now();
          fn2();
        }
      }, this.periodMs - elapsed);
    }
  }
}

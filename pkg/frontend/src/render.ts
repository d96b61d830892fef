// DOM renderers. Everything here is read-only with respect to state: the
// badge class shown is the snapshot's feedback string verbatim, never a
// client-side reclassification of the force value.

import { FINGERS, type FeedbackClass, type Snapshot } from "./protocol.js";

export const BADGE_LABELS: Record<FeedbackClass, string> = {
  none: "None",
  haptic: "Haptic",
  haptic_force: "Haptic+Force",
  force: "Force",
};

export const FINGER_COLORS: Record<string, string> = {
  thumb: "#e05c4b",
  index: "#3f84d2",
  middle: "#3aa05c",
  ring: "#c08a2e",
  pinky: "#8d5bbd",
};

export const FORCE_BAR_MAX_G = 3000;

const SVG_NS = "http://www.w3.org/2000/svg";

// oblique projection: x forward on screen-x, flexion (-z) downward, with a
// y shear so finger spread stays visible
export function project(point: number[]): [number, number] {
  const [x, y, z] = point;
  return [x + 0.45 * y, -z + 0.22 * y];
}

export function renderSkeleton(svg: Element, points: Record<string, number[][]>): void {
  for (const [finger, line] of Object.entries(points)) {
    const id = `finger-${finger}`;
    let poly = svg.querySelector(`[data-id="${id}"]`);
    if (poly === null) {
      poly = svg.ownerDocument!.createElementNS(SVG_NS, "polyline");
      poly.setAttribute("data-id", id);
      poly.setAttribute("fill", "none");
      poly.setAttribute("stroke", FINGER_COLORS[finger] ?? "#888");
      poly.setAttribute("stroke-width", "0.006");
      poly.setAttribute("stroke-linecap", "round");
      poly.setAttribute("stroke-linejoin", "round");
      svg.appendChild(poly);
    }
    const pts = line.map((p) => project(p).map((c) => c.toFixed(4)).join(",")).join(" ");
    poly.setAttribute("points", pts);
  }
}

/** Log-scale fill fraction for a force bar, 0 g -> 0, 3000 g -> 1. */
export function barFraction(grams: number): number {
  const clamped = Math.min(Math.max(grams, 0), FORCE_BAR_MAX_G);
  return Math.log10(1 + clamped) / Math.log10(1 + FORCE_BAR_MAX_G);
}

function ensureFingerRow(container: Element, finger: string, role: string): Element {
  let row = container.querySelector(`[data-finger="${finger}"]`);
  if (row === null) {
    row = container.ownerDocument!.createElement("div");
    row.setAttribute("data-finger", finger);
    row.className = role;
    container.appendChild(row);
  }
  return row;
}

export function renderForceBars(container: Element, forces: number[]): void {
  FINGERS.forEach((finger, i) => {
    const row = ensureFingerRow(container, finger, "force-row");
    let label = row.querySelector(".force-label");
    let track = row.querySelector(".force-track");
    if (label === null) {
      label = row.ownerDocument!.createElement("span");
      label.className = "force-label";
      label.textContent = finger;
      row.appendChild(label);
      track = row.ownerDocument!.createElement("div");
      track.className = "force-track";
      const fill = row.ownerDocument!.createElement("div");
      fill.className = "force-fill";
      track.appendChild(fill);
      const value = row.ownerDocument!.createElement("span");
      value.className = "force-value";
      row.appendChild(track);
      row.appendChild(value);
    }
    const fill = row.querySelector(".force-fill") as HTMLElement;
    const value = row.querySelector(".force-value") as HTMLElement;
    fill.style.width = `${(100 * barFraction(forces[i])).toFixed(1)}%`;
    fill.setAttribute("data-grams", String(forces[i]));
    value.textContent = `${Math.round(forces[i])} g`;
  });
}

export function renderBadges(container: Element, feedback: FeedbackClass[]): void {
  FINGERS.forEach((finger, i) => {
    const row = ensureFingerRow(container, finger, "badge");
    const cls = feedback[i];
    row.setAttribute("data-class", cls); // verbatim snapshot value
    row.textContent = `${finger}: ${BADGE_LABELS[cls]}`;
  });
}

export function renderSnapshot(
  els: {
    gloveSvg: Element;
    robotSvg: Element;
    bars: Element;
    badges: Element;
    meta: Element;
  },
  snapshot: Snapshot,
): void {
  renderSkeleton(els.gloveSvg, snapshot.glove_points);
  renderSkeleton(els.robotSvg, snapshot.robot_points);
  renderForceBars(els.bars, snapshot.forces);
  renderBadges(els.badges, snapshot.feedback);
  els.meta.textContent =
    `t=${snapshot.t.toFixed(2)}s scenario=${snapshot.scenario} config=${snapshot.config_hash}`;
  els.meta.setAttribute("data-config-hash", snapshot.config_hash);
}

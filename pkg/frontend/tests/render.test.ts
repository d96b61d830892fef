import { describe, expect, it } from "vitest";

import { barFraction, project, renderBadges, renderForceBars, renderSkeleton } from "../src/render.js";
import type { FeedbackClass } from "../src/protocol.js";

describe("force bars", () => {
  it("log fraction hits both endpoints and is monotone", () => {
    expect(barFraction(0)).toBe(0);
    expect(barFraction(3000)).toBeCloseTo(1, 12);
    expect(barFraction(5000)).toBeCloseTo(1, 12);
    let prev = -1;
    for (const g of [0, 5, 10, 50, 100, 500, 3000]) {
      const f = barFraction(g);
      expect(f).toBeGreaterThan(prev);
      prev = f;
    }
  });

  it("renders five rows and updates widths in place", () => {
    const container = document.createElement("div");
    renderForceBars(container, [0, 10, 50, 100, 3000]);
    const fills = container.querySelectorAll(".force-fill");
    expect(fills).toHaveLength(5);
    expect((fills[0] as HTMLElement).style.width).toBe("0.0%");
    expect((fills[4] as HTMLElement).style.width).toBe("100.0%");
    renderForceBars(container, [100, 0, 0, 0, 0]);
    expect(container.querySelectorAll(".force-fill")).toHaveLength(5);
    expect(Number((fills[0] as HTMLElement).getAttribute("data-grams"))).toBe(100);
  });
});

describe("badges", () => {
  it("shows the snapshot class verbatim with a display label", () => {
    const container = document.createElement("div");
    const classes: FeedbackClass[] = ["none", "haptic", "haptic_force", "force", "none"];
    renderBadges(container, classes);
    const badges = container.querySelectorAll("[data-finger]");
    expect(badges).toHaveLength(5);
    expect(badges[1].getAttribute("data-class")).toBe("haptic");
    expect(badges[2].getAttribute("data-class")).toBe("haptic_force");
    expect(badges[2].textContent).toBe("middle: Haptic+Force");
    renderBadges(container, ["force", "force", "force", "force", "force"]);
    expect(container.querySelectorAll("[data-finger]")).toHaveLength(5);
    expect(badges[0].getAttribute("data-class")).toBe("force");
  });
});

describe("skeleton", () => {
  it("projects flexion downward on screen", () => {
    const flat = project([0.2, 0.0, 0.0]);
    const flexed = project([0.2, 0.0, -0.08]);
    expect(flexed[1]).toBeGreaterThan(flat[1]); // svg y grows downward
  });

  it("draws one polyline per finger and updates points", () => {
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    const points = {
      thumb: [[0, 0, 0], [0.05, 0.03, -0.01], [0.1, 0.05, -0.02]],
      index: [[0, 0, 0], [0.09, 0.03, 0], [0.16, 0.03, -0.03]],
    };
    renderSkeleton(svg, points);
    const lines = svg.querySelectorAll("polyline");
    expect(lines).toHaveLength(2);
    const before = lines[0].getAttribute("points");
    points.thumb[2] = [0.12, 0.05, -0.05];
    renderSkeleton(svg, points);
    expect(svg.querySelectorAll("polyline")).toHaveLength(2);
    expect(lines[0].getAttribute("points")).not.toBe(before);
    expect(before!.split(" ")).toHaveLength(3);
  });
});

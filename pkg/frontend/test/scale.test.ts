import { describe, expect, it } from "vitest";

import {
  Bounds,
  densityAlpha,
  fullViewport,
  invertLinear,
  panViewport,
  scaleLinear,
  ticks,
  viewportsEqual,
  zoomViewport,
} from "../src/scale.js";

const BOUNDS: Bounds = { x: [0, 1], y: [0, 100] };

describe("linear scale", () => {
  it("maps domain ends onto range ends", () => {
    expect(scaleLinear(0, 0, 1, 40, 640)).toBe(40);
    expect(scaleLinear(1, 0, 1, 40, 640)).toBe(640);
  });

  it("handles inverted ranges (pixel y)", () => {
    expect(scaleLinear(0, 0, 100, 560, 10)).toBe(560);
    expect(scaleLinear(100, 0, 100, 560, 10)).toBe(10);
  });

  it("invert round-trips", () => {
    for (const v of [0.13, 0.5, 0.97]) {
      const px = scaleLinear(v, 0, 1, 40, 640);
      expect(invertLinear(px, 0, 1, 40, 640)).toBeCloseTo(v, 12);
    }
  });
});

describe("zoom", () => {
  it("keeps the data point under the cursor fixed", () => {
    const vp = fullViewport(BOUNDS);
    const zoomed = zoomViewport(vp, 0.3, 40, 2, BOUNDS);
    // relative position of (0.3, 40) inside the viewport is unchanged
    const fx = (0.3 - zoomed.x0) / (zoomed.x1 - zoomed.x0);
    const fy = (40 - zoomed.y0) / (zoomed.y1 - zoomed.y0);
    expect(fx).toBeCloseTo(0.3, 9);
    expect(fy).toBeCloseTo(0.4, 9);
    expect(zoomed.x1 - zoomed.x0).toBeCloseTo(0.5, 9);
  });

  it("zooming out saturates at the full bounds", () => {
    const vp = fullViewport(BOUNDS);
    const out = zoomViewport(vp, 0.5, 50, 1 / 4, BOUNDS);
    expect(viewportsEqual(out, vp)).toBe(true);
  });

  it("zooming in stops at the minimum span", () => {
    let vp = fullViewport(BOUNDS);
    for (let i = 0; i < 60; i++) {
      vp = zoomViewport(vp, 0.5, 50, 2, BOUNDS);
    }
    expect(vp.x1 - vp.x0).toBeGreaterThanOrEqual(1e-3 - 1e-12);
    expect(vp.x0).toBeGreaterThanOrEqual(0);
    expect(vp.x1).toBeLessThanOrEqual(1);
  });

  it("zoom near an edge stays inside bounds", () => {
    const vp = zoomViewport(fullViewport(BOUNDS), 0.01, 1, 3, BOUNDS);
    expect(vp.x0).toBeGreaterThanOrEqual(0);
    expect(vp.y0).toBeGreaterThanOrEqual(0);
  });
});

describe("pan", () => {
  it("shifts by the data delta", () => {
    const vp = zoomViewport(fullViewport(BOUNDS), 0.5, 50, 2, BOUNDS);
    const moved = panViewport(vp, 0.1, -5, BOUNDS);
    expect(moved.x0).toBeCloseTo(vp.x0 + 0.1, 9);
    expect(moved.y0).toBeCloseTo(vp.y0 - 5, 9);
    expect(moved.x1 - moved.x0).toBeCloseTo(vp.x1 - vp.x0, 9);
  });

  it("clamps at the bounds", () => {
    const vp = zoomViewport(fullViewport(BOUNDS), 0.5, 50, 2, BOUNDS);
    const moved = panViewport(vp, -10, -1000, BOUNDS);
    expect(moved.x0).toBe(0);
    expect(moved.y0).toBe(0);
  });

  it("pan then pan back restores the viewport", () => {
    const vp = zoomViewport(fullViewport(BOUNDS), 0.4, 60, 2, BOUNDS);
    const there = panViewport(vp, 0.05, 3, BOUNDS);
    const back = panViewport(there, -0.05, -3, BOUNDS);
    expect(viewportsEqual(back, vp, 1e-9)).toBe(true);
  });
});

describe("reset", () => {
  it("pan/zoom then reset restores the original viewport", () => {
    const home = fullViewport(BOUNDS);
    let vp = zoomViewport(home, 0.7, 20, 3, BOUNDS);
    vp = panViewport(vp, -0.1, 12, BOUNDS);
    expect(viewportsEqual(vp, home)).toBe(false);
    expect(viewportsEqual(fullViewport(BOUNDS), home)).toBe(true);
  });
});

describe("ticks", () => {
  it("covers the unit interval with round steps", () => {
    expect(ticks(0, 1, 5)).toEqual([0, 0.2, 0.4, 0.6, 0.8, 1]);
  });

  it("covers 0..100", () => {
    expect(ticks(0, 100, 5)).toEqual([0, 20, 40, 60, 80, 100]);
  });

  it("stays inside a zoomed window", () => {
    const out = ticks(0.37, 0.62, 5);
    expect(out.length).toBeGreaterThan(2);
    for (const t of out) {
      expect(t).toBeGreaterThanOrEqual(0.37);
      expect(t).toBeLessThanOrEqual(0.62);
    }
  });

  it("returns nothing for a degenerate span", () => {
    expect(ticks(5, 5, 4)).toEqual([]);
  });
});

describe("density alpha", () => {
  it("is 0 for empty cells and 1 at the max", () => {
    expect(densityAlpha(0, 50)).toBe(0);
    expect(densityAlpha(50, 50)).toBe(1);
  });

  it("grows monotonically but sublinearly", () => {
    const a1 = densityAlpha(1, 100);
    const a10 = densityAlpha(10, 100);
    const a100 = densityAlpha(100, 100);
    expect(a1).toBeGreaterThan(0);
    expect(a10).toBeGreaterThan(a1);
    expect(a100).toBeGreaterThan(a10);
    expect(a10).toBeGreaterThan(0.1); // log scaling lifts the low end
  });
});

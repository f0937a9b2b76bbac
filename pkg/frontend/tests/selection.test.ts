import { describe, expect, it } from "vitest";

import {
  canSubmit,
  lassoSelect,
  pointInPolygon,
  SelectionState,
} from "../src/selection";

const square = [
  { x: 0, y: 0 },
  { x: 10, y: 0 },
  { x: 10, y: 10 },
  { x: 0, y: 10 },
];

describe("SelectionState", () => {
  it("toggles membership", () => {
    const sel = new SelectionState();
    sel.toggle(3);
    expect(sel.has(3)).toBe(true);
    sel.toggle(3);
    expect(sel.has(3)).toBe(false);
  });

  it("deduplicates and sorts ids", () => {
    const sel = new SelectionState();
    sel.addAll([5, 1, 5, 2, 1]);
    expect(sel.ids()).toEqual([1, 2, 5]);
  });

  it("clear empties everything", () => {
    const sel = new SelectionState();
    sel.addAll([1, 2]);
    sel.clear();
    expect(sel.size).toBe(0);
  });
});

describe("canSubmit", () => {
  it("is disabled for an empty selection", () => {
    expect(canSubmit(new SelectionState(), false)).toBe(false);
  });

  it("is disabled while a submission is in flight", () => {
    const sel = new SelectionState();
    sel.toggle(1);
    expect(canSubmit(sel, true)).toBe(false);
    expect(canSubmit(sel, false)).toBe(true);
  });
});

describe("pointInPolygon", () => {
  it("detects interior and exterior points", () => {
    expect(pointInPolygon({ x: 5, y: 5 }, square)).toBe(true);
    expect(pointInPolygon({ x: 15, y: 5 }, square)).toBe(false);
    expect(pointInPolygon({ x: -1, y: -1 }, square)).toBe(false);
  });

  it("counts boundary points as inside", () => {
    expect(pointInPolygon({ x: 0, y: 5 }, square)).toBe(true);
    expect(pointInPolygon({ x: 10, y: 10 }, square)).toBe(true);
  });

  it("handles a concave polygon", () => {
    const arrow = [
      { x: 0, y: 0 },
      { x: 10, y: 0 },
      { x: 10, y: 10 },
      { x: 5, y: 4 },
      { x: 0, y: 10 },
    ];
    expect(pointInPolygon({ x: 5, y: 2 }, arrow)).toBe(true);
    expect(pointInPolygon({ x: 5, y: 8 }, arrow)).toBe(false);
  });

  it("rejects degenerate polygons", () => {
    expect(pointInPolygon({ x: 0, y: 0 }, square.slice(0, 2))).toBe(false);
  });
});

describe("lassoSelect", () => {
  it("selects exactly the nodes whose positions fall inside", () => {
    const positions = new Map([
      [0, { x: 2, y: 2 }],
      [1, { x: 9, y: 9 }],
      [2, { x: 20, y: 20 }],
    ]);
    expect(lassoSelect(positions, square)).toEqual([0, 1]);
  });

  it("returns sorted ids", () => {
    const positions = new Map([
      [7, { x: 1, y: 1 }],
      [3, { x: 2, y: 2 }],
    ]);
    expect(lassoSelect(positions, square)).toEqual([3, 7]);
  });
});

import { describe, expect, it } from "vitest";

import { colorbarStops, makeColorScale } from "../src/color";

describe("makeColorScale", () => {
  it("uses the exact min/max of the values as endpoints", () => {
    const scale = makeColorScale("error", [0.4, 0.1, 0.9, 0.5]);
    expect(scale.min).toBe(0.1);
    expect(scale.max).toBe(0.9);
  });

  it("maps distinct values to distinct colors across the range", () => {
    const scale = makeColorScale("x", [0, 1]);
    expect(scale.color(0)).not.toBe(scale.color(1));
    expect(scale.color(0)).not.toBe(scale.color(0.5));
  });

  it("handles a constant stat without NaN colors", () => {
    const scale = makeColorScale("x", [3, 3, 3]);
    expect(scale.min).toBe(3);
    expect(scale.max).toBe(3);
    expect(scale.color(3)).toMatch(/^(#|rgb)/);
  });

  it("ticks span min to max inclusive, evenly", () => {
    const scale = makeColorScale("x", [2, 10]);
    expect(scale.ticks(5)).toEqual([2, 4, 6, 8, 10]);
  });

  it("rejects an empty value list", () => {
    expect(() => makeColorScale("x", [])).toThrow();
  });
});

describe("colorbarStops", () => {
  it("starts at the min color and ends at the max color", () => {
    const scale = makeColorScale("x", [0, 1]);
    const stops = colorbarStops(scale, 10);
    expect(stops[0].offset).toBe(0);
    expect(stops.at(-1)!.offset).toBe(1);
    expect(stops[0].color).toBe(scale.color(0));
    expect(stops.at(-1)!.color).toBe(scale.color(1));
  });
});

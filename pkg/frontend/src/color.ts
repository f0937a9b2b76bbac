import { interpolateRdYlBu, scaleSequential } from "d3";

export interface ColorScale {
  stat: string;
  min: number;
  max: number;
  color: (value: number) => string;
  /** evenly spaced legend values from min to max inclusive */
  ticks: (count: number) => number[];
}

/**
 * Continuous diverging scale over the active stat's observed range. The
 * endpoints are exactly the min and max of the values supplied (a constant
 * stat degrades to the scale midpoint for every node).
 */
export function makeColorScale(stat: string, values: number[]): ColorScale {
  if (values.length === 0) throw new Error(`no values for stat ${stat}`);
  const min = Math.min(...values);
  const max = Math.max(...values);
  // low values = red (bad), high = blue (good); matches an error-probability
  // coloring where small probability of the true answer means failure
  const scale = scaleSequential(interpolateRdYlBu).domain([min, max]);
  return {
    stat,
    min,
    max,
    color: (value) => (min === max ? scale(min + 0.5) : scale(value)),
    ticks: (count) => {
      if (count < 2) return [min];
      const out: number[] = [];
      for (let i = 0; i < count; i++) out.push(min + ((max - min) * i) / (count - 1));
      return out;
    },
  };
}

/** Gradient stops for rendering the colorbar of a scale. */
export function colorbarStops(scale: ColorScale, steps = 32): { offset: number; color: string }[] {
  const stops: { offset: number; color: string }[] = [];
  for (let i = 0; i <= steps; i++) {
    const t = i / steps;
    stops.push({ offset: t, color: scale.color(scale.min + t * (scale.max - scale.min)) });
  }
  return stops;
}

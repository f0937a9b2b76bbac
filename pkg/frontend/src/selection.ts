// Node-selection state plus the lasso geometry. Pure logic, no DOM.

export type Point = { x: number; y: number };

export class SelectionState {
  private selected = new Set<number>();

  toggle(id: number): void {
    if (this.selected.has(id)) this.selected.delete(id);
    else this.selected.add(id);
  }

  addAll(ids: Iterable<number>): void {
    for (const id of ids) this.selected.add(id);
  }

  clear(): void {
    this.selected.clear();
  }

  has(id: number): boolean {
    return this.selected.has(id);
  }

  get size(): number {
    return this.selected.size;
  }

  /** sorted, deduplicated ids ready for the selection endpoint */
  ids(): number[] {
    return Array.from(this.selected).sort((a, b) => a - b);
  }
}

export function canSubmit(selection: SelectionState, inFlight: boolean): boolean {
  return selection.size > 0 && !inFlight;
}

/** Ray-casting point-in-polygon; boundary points count as inside. */
export function pointInPolygon(point: Point, polygon: Point[]): boolean {
  if (polygon.length < 3) return false;
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const a = polygon[i];
    const b = polygon[j];
    if (onSegment(point, a, b)) return true;
    const crosses =
      a.y > point.y !== b.y > point.y &&
      point.x < ((b.x - a.x) * (point.y - a.y)) / (b.y - a.y) + a.x;
    if (crosses) inside = !inside;
  }
  return inside;
}

function onSegment(p: Point, a: Point, b: Point): boolean {
  const cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  if (Math.abs(cross) > 1e-9) return false;
  const dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
  const lenSq = (b.x - a.x) ** 2 + (b.y - a.y) ** 2;
  return dot >= 0 && dot <= lenSq;
}

/** Ids of the positioned nodes inside the lasso polygon. */
export function lassoSelect(
  positions: Map<number, Point>,
  polygon: Point[],
): number[] {
  const ids: number[] = [];
  for (const [id, pos] of positions) {
    if (pointInPolygon(pos, polygon)) ids.push(id);
  }
  return ids.sort((a, b) => a - b);
}

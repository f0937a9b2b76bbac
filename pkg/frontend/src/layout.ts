import {
  forceCenter,
  forceCollide,
  forceLink,
  forceManyBody,
  forceSimulation,
  type SimulationLinkDatum,
  type SimulationNodeDatum,
} from "d3";

import { mulberry32 } from "./random";
import type { GraphDoc } from "./types";

export interface LayoutNode extends SimulationNodeDatum {
  id: number;
  radius: number;
}

export interface LayoutResult {
  positions: Map<number, { x: number; y: number }>;
  /** final simulation alpha; small means the layout settled */
  alpha: number;
}

export function nodeRadius(memberCount: number): number {
  return 4 + 2.5 * Math.sqrt(memberCount);
}

/**
 * Deterministic force-directed layout: fixed-seed random source, synchronous
 * ticks, positions scaled into the given viewport. Presentation only; never
 * persisted into analysis artifacts.
 */
export function computeLayout(
  graph: GraphDoc,
  width: number,
  height: number,
  seed = 42,
  ticks = 300,
): LayoutResult {
  const random = mulberry32(seed);
  const nodes: LayoutNode[] = graph.nodes.map((n) => {
    // seeded initial placement in a disc; the simulation itself is
    // deterministic, so the seed fully determines the final layout
    const radius = 120 * Math.sqrt(random());
    const angle = 2 * Math.PI * random();
    return {
      id: n.id,
      radius: nodeRadius(n.stats.size),
      x: radius * Math.cos(angle),
      y: radius * Math.sin(angle),
    };
  });
  const links: SimulationLinkDatum<LayoutNode>[] = graph.edges.map((e) => ({
    source: e.source,
    target: e.target,
  }));

  const simulation = forceSimulation(nodes)
    .randomSource(random)
    .force(
      "link",
      forceLink<LayoutNode, SimulationLinkDatum<LayoutNode>>(links)
        .id((d) => d.id)
        .distance(40),
    )
    .force("charge", forceManyBody().strength(-80))
    .force("center", forceCenter(0, 0))
    .force("collide", forceCollide<LayoutNode>((d) => d.radius + 2))
    .stop();

  for (let i = 0; i < ticks; i++) simulation.tick();

  // fit into the viewport with a margin
  const xs = nodes.map((n) => n.x ?? 0);
  const ys = nodes.map((n) => n.y ?? 0);
  const pad = 30;
  const minX = Math.min(...xs, 0);
  const maxX = Math.max(...xs, 1);
  const minY = Math.min(...ys, 0);
  const maxY = Math.max(...ys, 1);
  const scale = Math.min(
    (width - 2 * pad) / Math.max(maxX - minX, 1e-9),
    (height - 2 * pad) / Math.max(maxY - minY, 1e-9),
    1.5,
  );
  const offsetX = (width - scale * (maxX - minX)) / 2;
  const offsetY = (height - scale * (maxY - minY)) / 2;

  const positions = new Map<number, { x: number; y: number }>();
  for (const node of nodes) {
    positions.set(node.id, {
      x: offsetX + scale * ((node.x ?? 0) - minX),
      y: offsetY + scale * ((node.y ?? 0) - minY),
    });
  }
  return { positions, alpha: simulation.alpha() };
}

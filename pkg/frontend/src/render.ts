// SVG graph view: nodes sized by member count and colored by the active
// stat, edges underneath, a colorbar legend, click-to-toggle and
// shift-drag lasso selection.

import { select, type Selection } from "d3";

import { colorbarStops, makeColorScale, type ColorScale } from "./color";
import { computeLayout, nodeRadius } from "./layout";
import { lassoSelect, SelectionState, type Point } from "./selection";
import type { GraphDoc } from "./types";

export interface RendererOptions {
  width?: number;
  height?: number;
  seed?: number;
  onSelectionChange?: (ids: number[]) => void;
}

export function statOptions(graph: GraphDoc): string[] {
  if (graph.nodes.length === 0) return ["size"];
  return ["size", ...Object.keys(graph.nodes[0].stats.mean).sort()];
}

function statValue(graph: GraphDoc, nodeIndex: number, stat: string): number {
  const node = graph.nodes[nodeIndex];
  return stat === "size" ? node.stats.size : node.stats.mean[stat];
}

export class GraphRenderer {
  readonly selection = new SelectionState();
  private svg: Selection<SVGSVGElement, unknown, null, undefined>;
  private scale: ColorScale | null = null;
  private positions: Map<number, Point>;
  private width: number;
  private height: number;
  private lassoPoints: Point[] = [];
  private drawingLasso = false;

  constructor(
    container: HTMLElement,
    private graph: GraphDoc,
    private options: RendererOptions = {},
  ) {
    if (!Array.isArray(graph.nodes) || !Array.isArray(graph.edges)) {
      throw new Error("malformed graph document: nodes/edges missing");
    }
    this.width = options.width ?? 900;
    this.height = options.height ?? 620;
    const layout = computeLayout(graph, this.width, this.height, options.seed ?? 42);
    this.positions = layout.positions;
    this.svg = select(container)
      .append("svg")
      .attr("viewBox", `0 0 ${this.width} ${this.height}`)
      .attr("class", "graph-canvas");
    this.bindLasso();
  }

  get colorScale(): ColorScale | null {
    return this.scale;
  }

  render(stat: string): void {
    this.svg.selectAll("*").remove();

    if (this.graph.nodes.length === 0) {
      this.svg
        .append("text")
        .attr("x", this.width / 2)
        .attr("y", this.height / 2)
        .attr("text-anchor", "middle")
        .attr("class", "empty-message")
        .text("empty graph: no nodes to draw");
      return;
    }

    const values = this.graph.nodes.map((_, i) => statValue(this.graph, i, stat));
    this.scale = makeColorScale(stat, values);

    const edgeLayer = this.svg.append("g").attr("class", "edges");
    for (const edge of this.graph.edges) {
      const a = this.positions.get(edge.source)!;
      const b = this.positions.get(edge.target)!;
      edgeLayer
        .append("line")
        .attr("x1", a.x)
        .attr("y1", a.y)
        .attr("x2", b.x)
        .attr("y2", b.y)
        .attr("stroke-width", Math.min(1 + Math.log1p(edge.shared_count), 4));
    }

    const nodeLayer = this.svg.append("g").attr("class", "nodes");
    this.graph.nodes.forEach((node, i) => {
      const pos = this.positions.get(node.id)!;
      nodeLayer
        .append("circle")
        .attr("cx", pos.x)
        .attr("cy", pos.y)
        .attr("r", nodeRadius(node.stats.size))
        .attr("fill", this.scale!.color(values[i]))
        .attr("data-node-id", node.id)
        .classed("selected", this.selection.has(node.id))
        .append("title")
        .text(`node ${node.id}: ${node.stats.size} members`);
    });

    nodeLayer.selectAll<SVGCircleElement, unknown>("circle").on("click", (event) => {
      const target = event.currentTarget as SVGCircleElement;
      this.selection.toggle(Number(target.dataset.nodeId));
      this.refreshSelection();
    });

    this.renderColorbar();
    this.refreshSelection();
  }

  private renderColorbar(): void {
    if (!this.scale) return;
    const barWidth = 220;
    const barHeight = 12;
    const x = this.width - barWidth - 24;
    const y = this.height - 44;

    const defs = this.svg.append("defs");
    const gradient = defs.append("linearGradient").attr("id", "stat-gradient");
    for (const stop of colorbarStops(this.scale)) {
      gradient
        .append("stop")
        .attr("offset", `${stop.offset * 100}%`)
        .attr("stop-color", stop.color);
    }

    const legend = this.svg.append("g").attr("class", "colorbar");
    legend
      .append("rect")
      .attr("x", x)
      .attr("y", y)
      .attr("width", barWidth)
      .attr("height", barHeight)
      .attr("fill", "url(#stat-gradient)");
    legend
      .append("text")
      .attr("x", x)
      .attr("y", y - 6)
      .attr("class", "colorbar-label")
      .text(this.scale.stat);
    const [lo, hi] = [this.scale.min, this.scale.max];
    legend
      .append("text")
      .attr("x", x)
      .attr("y", y + barHeight + 14)
      .attr("class", "colorbar-tick")
      .text(lo.toPrecision(4));
    legend
      .append("text")
      .attr("x", x + barWidth)
      .attr("y", y + barHeight + 14)
      .attr("text-anchor", "end")
      .attr("class", "colorbar-tick")
      .text(hi.toPrecision(4));
  }

  private refreshSelection(): void {
    this.svg
      .selectAll<SVGCircleElement, unknown>("circle")
      .classed("selected", (_, i, nodes) =>
        this.selection.has(Number((nodes[i] as SVGCircleElement).dataset.nodeId)),
      );
    this.options.onSelectionChange?.(this.selection.ids());
  }

  clearSelection(): void {
    this.selection.clear();
    this.refreshSelection();
  }

  private svgPoint(event: MouseEvent): Point {
    const rect = (this.svg.node() as SVGSVGElement).getBoundingClientRect();
    return {
      x: ((event.clientX - rect.left) / Math.max(rect.width, 1)) * this.width,
      y: ((event.clientY - rect.top) / Math.max(rect.height, 1)) * this.height,
    };
  }

  private bindLasso(): void {
    const node = this.svg.node() as SVGSVGElement;
    node.addEventListener("mousedown", (event) => {
      if (!event.shiftKey) return;
      this.drawingLasso = true;
      this.lassoPoints = [this.svgPoint(event)];
      event.preventDefault();
    });
    node.addEventListener("mousemove", (event) => {
      if (!this.drawingLasso) return;
      this.lassoPoints.push(this.svgPoint(event));
      this.svg.selectAll(".lasso").remove();
      this.svg
        .append("polyline")
        .attr("class", "lasso")
        .attr("points", this.lassoPoints.map((p) => `${p.x},${p.y}`).join(" "));
    });
    const finish = () => {
      if (!this.drawingLasso) return;
      this.drawingLasso = false;
      this.svg.selectAll(".lasso").remove();
      if (this.lassoPoints.length >= 3) {
        this.selection.addAll(lassoSelect(this.positions, this.lassoPoints));
        this.refreshSelection();
      }
      this.lassoPoints = [];
    };
    node.addEventListener("mouseup", finish);
    node.addEventListener("mouseleave", finish);
  }
}

/** Relevance explorer: weight sliders, per-node score curves, and the
 * rendered model view.
 *
 * Scores, lanes, columns and colour bins all arrive from the service;
 * this module only turns them into SVG coordinates.  Requests are built
 * from `ExplorerState`, so a URL-restored state reproduces the same
 * document.
 */

import { esc, fmt } from "./html.js";
import { ALPHA_MAX, type ExplorerState } from "./state.js";
import type {
  ModelBody,
  ModelDoc,
  ModelEdge,
  ModelNode,
  NodeId,
  SweepBody,
  SweepTable,
} from "./types.js";

/** Interval-bin palette, light to dark; index = `edge.color_bin`. */
export const EDGE_COLORS = [
  "#c8e6c9",
  "#a5d6a7",
  "#81c784",
  "#66bb6a",
  "#4caf50",
  "#388e3c",
  "#1b5e20",
] as const;

/** Line palette for sweep curves, cycled per node. */
export const CURVE_COLORS = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
] as const;

export type SweepAxis = "w1" | "w2" | "alpha";

/** Grid of values for one slider; the damping axis stays below one. */
export function axisValues(axis: SweepAxis): number[] {
  const grid: number[] = [];
  for (let i = 0; i <= 10; i += 1) grid.push(i / 10);
  if (axis === "alpha") grid[10] = ALPHA_MAX;
  return grid;
}

/** Sweep request varying one axis, the other two pinned at the state. */
export function sweepSpec(state: ExplorerState, axis: SweepAxis, nodes: NodeId[]): SweepBody {
  const body: SweepBody = {
    w1_values: axis === "w1" ? axisValues("w1") : [state.w1],
    w2_values: axis === "w2" ? axisValues("w2") : [state.w2],
    alpha_values: axis === "alpha" ? axisValues("alpha") : [state.alpha],
  };
  if (nodes.length > 0) body.nodes = nodes;
  if (state.clusters !== null && state.clusterIndex !== null) {
    body.clusters = state.clusters;
    body.cluster_index = state.clusterIndex;
  }
  return body;
}

/** Model request for the current state. */
export function modelBody(state: ExplorerState): ModelBody {
  const body: ModelBody = {
    relevance: { w1: state.w1, w2: state.w2, alpha: state.alpha },
    min_relevance: state.minRelevance,
    options: {
      lane_aspect: state.laneAspect,
      min_edge_patients: state.hideBelow,
      interval_bins: state.bins,
      show_endpoints: state.showEndpoints,
    },
  };
  if (state.clusters !== null && state.clusterIndex !== null) {
    body.relevance.clusters = state.clusters;
    body.relevance.cluster_index = state.clusterIndex;
  }
  if (state.maxRelevance !== null) body.max_relevance = state.maxRelevance;
  return body;
}

/** Pick the nodes whose curves the sweep panel follows: the highest
 * scored real nodes of the current document, up to `limit`. */
export function pinnedNodes(doc: ModelDoc, limit = 6): NodeId[] {
  const real = doc.nodes.filter((n) => !n.virtual && n.relevance !== null);
  real.sort((a, b) => (b.relevance ?? 0) - (a.relevance ?? 0) || (a.id < b.id ? -1 : 1));
  return real.slice(0, limit).map((n) => JSON.parse(n.id) as NodeId);
}

/** Map one curve onto a `width`x`height` box as a polyline points
 * attribute.  X spans the axis grid, Y spans [0, 1] top-down. */
export function curvePoints(
  xs: number[],
  ys: number[],
  width: number,
  height: number,
  pad = 8,
): string {
  if (xs.length === 0 || xs.length !== ys.length) return "";
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const span = x1 - x0 || 1;
  const points: string[] = [];
  for (let i = 0; i < xs.length; i += 1) {
    const xi = xs[i];
    const yi = ys[i];
    if (xi === undefined || yi === undefined) continue;
    const px = pad + ((xi - x0) / span) * (width - 2 * pad);
    const py = height - pad - Math.min(1, Math.max(0, yi)) * (height - 2 * pad);
    points.push(`${fmt(px, 2)},${fmt(py, 2)}`);
  }
  return points.join(" ");
}

function nodeName(node: NodeId): string {
  return node.join(", ");
}

/** Render the sweep table as one polyline per followed node. */
export function sweepSvg(
  table: SweepTable,
  axis: SweepAxis,
  width = 360,
  height = 160,
): string {
  const xs = table.entries.map((e) => e[axis]);
  const lines: string[] = [];
  for (let n = 0; n < table.nodes.length; n += 1) {
    const node = table.nodes[n];
    if (node === undefined) continue;
    const ys = table.entries.map((e) => e.scores[n] ?? 0);
    const color = CURVE_COLORS[n % CURVE_COLORS.length] ?? CURVE_COLORS[0];
    lines.push(
      `<polyline fill="none" stroke="${color}" stroke-width="1.5" ` +
        `points="${curvePoints(xs, ys, width, height)}">` +
        `<title>${esc(nodeName(node))}</title></polyline>`,
    );
  }
  return (
    `<svg class="sweep" viewBox="0 0 ${width} ${height}" ` +
    `xmlns="http://www.w3.org/2000/svg" role="img">` +
    `<rect x="0" y="0" width="${width}" height="${height}" fill="none" stroke="#ccc"/>` +
    lines.join("") +
    `</svg>`
  );
}

/** Hover text for a model node: the full aspect tuple and its score. */
export function nodeTitle(node: ModelNode): string {
  const tuple = JSON.parse(node.id) as NodeId;
  const score = node.relevance === null ? "" : ` — ${fmt(node.relevance, 4)}`;
  return `(${nodeName(tuple)})${score}`;
}

const NODE_W = 96;
const NODE_H = 34;
const COL_GAP = 40;
const ROW_H = 72;
const PAD = 16;

interface Placed {
  x: number;
  y: number;
}

function laneRows(doc: ModelDoc): string[] {
  const rows = [...doc.lanes];
  if (doc.nodes.some((n) => n.virtual)) rows.unshift("");
  return rows;
}

function place(doc: ModelDoc): Map<string, Placed> {
  const rowIndex = new Map<string, number>();
  laneRows(doc).forEach((lane, i) => rowIndex.set(lane, i));
  const colIndex = new Map<number, number>();
  [...doc.columns].sort((a, b) => a - b).forEach((c, i) => colIndex.set(c, i));
  const placed = new Map<string, Placed>();
  for (const node of doc.nodes) {
    const row = rowIndex.get(node.lane) ?? 0;
    const col = colIndex.get(node.column) ?? 0;
    placed.set(node.id, {
      x: PAD + col * (NODE_W + COL_GAP),
      y: PAD + row * ROW_H,
    });
  }
  return placed;
}

function nodeFill(node: ModelNode): string {
  if (node.virtual) return "#e0e0e0";
  const r = Math.min(1, Math.max(0, node.relevance ?? 0));
  return `rgba(46, 125, 50, ${fmt(0.15 + 0.75 * r, 3)})`;
}

function renderNode(node: ModelNode, at: Placed): string {
  const title = `<title>${esc(nodeTitle(node))}</title>`;
  const label = `<text x="${at.x + NODE_W / 2}" y="${at.y + NODE_H / 2 + 4}" ` +
    `text-anchor="middle" font-size="11">${esc(node.label)}</text>`;
  if (node.virtual) {
    const cx = at.x + NODE_W / 2;
    const cy = at.y + NODE_H / 2;
    return (
      `<g class="node virtual" data-id="${esc(node.id)}">` +
      `<circle cx="${cx}" cy="${cy}" r="${NODE_H / 2}" fill="${nodeFill(node)}" stroke="#999"/>` +
      title + label + `</g>`
    );
  }
  return (
    `<g class="node" data-id="${esc(node.id)}">` +
    `<rect x="${at.x}" y="${at.y}" width="${NODE_W}" height="${NODE_H}" rx="6" ` +
    `fill="${nodeFill(node)}" stroke="#2e7d32"/>` +
    title + label + `</g>`
  );
}

function renderEdge(edge: ModelEdge, placed: Map<string, Placed>): string {
  const from = placed.get(edge.src);
  const to = placed.get(edge.dst);
  if (from === undefined || to === undefined) return "";
  const color = EDGE_COLORS[Math.min(edge.color_bin, EDGE_COLORS.length - 1)] ?? EDGE_COLORS[0];
  const width = 1 + Math.log1p(edge.frequency);
  const x1 = from.x + NODE_W;
  const y1 = from.y + NODE_H / 2;
  const x2 = to.x;
  const y2 = to.y + NODE_H / 2;
  const title =
    `${edge.patients} patients, ${edge.frequency} transitions, ` +
    `interval ${fmt(edge.interval.min, 1)}–${fmt(edge.interval.max, 1)} ` +
    `(mean ${fmt(edge.interval.mean, 1)})`;
  return (
    `<g class="edge">` +
    `<line x1="${fmt(x1, 1)}" y1="${y1}" x2="${fmt(x2, 1)}" y2="${y2}" ` +
    `stroke="${color}" stroke-width="${fmt(width, 2)}" marker-end="url(#arrow)"/>` +
    `<title>${esc(title)}</title></g>`
  );
}

function renderLegend(doc: ModelDoc, y: number): string {
  const swatches = doc.legend.interval_bins
    .map((bin, i) => {
      const color = EDGE_COLORS[Math.min(i, EDGE_COLORS.length - 1)];
      const x = PAD + i * 120;
      return (
        `<rect x="${x}" y="${y}" width="14" height="14" fill="${color}"/>` +
        `<text x="${x + 18}" y="${y + 11}" font-size="10">` +
        `${fmt(bin[0], 1)}–${fmt(bin[1], 1)}</text>`
      );
    })
    .join("");
  return `<g class="legend">${swatches}</g>`;
}

/** Lay the document out as SVG: one row per lane, one slot per column,
 * edges coloured by their interval bin. */
export function modelSvg(doc: ModelDoc): string {
  const placed = place(doc);
  const nRows = laneRows(doc).length;
  const nCols = doc.columns.length;
  const legendY = PAD + nRows * ROW_H + 8;
  const width = Math.max(
    2 * PAD + Math.max(1, nCols) * (NODE_W + COL_GAP) - COL_GAP,
    PAD + doc.legend.interval_bins.length * 120,
  );
  const height = legendY + 24;
  const laneLabels = laneRows(doc)
    .map((lane, i) => {
      const label = lane === "" ? "ends" : lane;
      return (
        `<text x="2" y="${PAD + i * ROW_H + NODE_H / 2}" font-size="10" ` +
        `fill="#666" writing-mode="tb">${esc(label)}</text>`
      );
    })
    .join("");
  const edges = doc.edges.map((e) => renderEdge(e, placed)).join("");
  const nodes = doc.nodes
    .map((n) => {
      const at = placed.get(n.id);
      return at === undefined ? "" : renderNode(n, at);
    })
    .join("");
  return (
    `<svg class="model" viewBox="0 0 ${width} ${height}" ` +
    `xmlns="http://www.w3.org/2000/svg" role="img">` +
    `<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" ` +
    `markerWidth="7" markerHeight="7" orient="auto-start-reverse">` +
    `<path d="M 0 0 L 10 5 L 0 10 z" fill="#888"/></marker></defs>` +
    laneLabels + edges + nodes + renderLegend(doc, legendY) +
    `</svg>`
  );
}

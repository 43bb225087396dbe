import { describe, expect, it } from "vitest";

import {
  axisValues,
  curvePoints,
  EDGE_COLORS,
  modelBody,
  modelSvg,
  nodeTitle,
  pinnedNodes,
  sweepSpec,
  sweepSvg,
} from "../src/explorer.js";
import { defaults } from "../src/state.js";
import type { ModelDoc, SweepTable } from "../src/types.js";

const DOC: ModelDoc = {
  lanes: ["clinic", "lab"],
  columns: [0, 1, 2],
  nodes: [
    {
      id: '["__start__", "__start__", 0]',
      lane: "",
      column: 0,
      key: "__start__",
      label: "START",
      relevance: null,
      virtual: true,
    },
    {
      id: '["ANC", "clinic", 1]',
      lane: "clinic",
      column: 1,
      key: "ANC",
      label: "ANC",
      relevance: 0.8,
      virtual: false,
    },
    {
      id: '["LAB", "lab", 2]',
      lane: "lab",
      column: 2,
      key: "LAB",
      label: "LAB",
      relevance: 0.3,
      virtual: false,
    },
  ],
  edges: [
    {
      src: '["ANC", "clinic", 1]',
      dst: '["LAB", "lab", 2]',
      frequency: 12,
      patients: 7,
      interval: { min: 1, mean: 3.5, max: 9 },
      color_bin: 2,
    },
  ],
  legend: {
    lane_aspect: "unit",
    key_aspect: "intervention",
    keys: ["ANC", "LAB"],
    interval_bins: [
      [0, 2],
      [2, 5],
      [5, 9],
    ],
  },
};

describe("request builders", () => {
  it("varies exactly one axis per sweep", () => {
    const state = { ...defaults(), mag: "m1", w1: 0.4, w2: 0.3, alpha: 0.6 };
    const spec = sweepSpec(state, "w1", [["ANC", "clinic", 1]]);
    expect(spec.w1_values.length).toBeGreaterThan(2);
    expect(spec.w2_values).toEqual([0.3]);
    expect(spec.alpha_values).toEqual([0.6]);
    expect(spec.nodes).toEqual([["ANC", "clinic", 1]]);
    expect(spec.clusters).toBeUndefined();
  });

  it("keeps every damping value below one", () => {
    for (const a of axisValues("alpha")) expect(a).toBeLessThan(1);
    expect(Math.max(...axisValues("w1"))).toBe(1);
  });

  it("passes the cluster restriction through both requests", () => {
    const state = { ...defaults(), mag: "m1", clusters: "cl9", clusterIndex: 1 };
    expect(sweepSpec(state, "alpha", []).clusters).toBe("cl9");
    const body = modelBody(state);
    expect(body.relevance.clusters).toBe("cl9");
    expect(body.relevance.cluster_index).toBe(1);
  });

  it("builds the model request from the state verbatim", () => {
    const state = {
      ...defaults(),
      mag: "m1",
      w1: 0.2,
      w2: 0.7,
      alpha: 0.5,
      minRelevance: 0.1,
      maxRelevance: 0.9,
      laneAspect: "occupation",
      hideBelow: 2,
      bins: 4,
      showEndpoints: false,
    };
    expect(modelBody(state)).toEqual({
      relevance: { w1: 0.2, w2: 0.7, alpha: 0.5 },
      min_relevance: 0.1,
      max_relevance: 0.9,
      options: {
        lane_aspect: "occupation",
        min_edge_patients: 2,
        interval_bins: 4,
        show_endpoints: false,
      },
    });
  });

  it("omits the unbounded ceiling from the request", () => {
    expect("max_relevance" in modelBody({ ...defaults(), mag: "m1" })).toBe(false);
  });
});

describe("curve geometry", () => {
  it("maps the axis range onto the padded box monotonically", () => {
    const points = curvePoints([0, 0.5, 1], [0, 0.5, 1], 100, 50, 10);
    const coords = points.split(" ").map((p) => p.split(",").map(Number));
    expect(coords).toHaveLength(3);
    const xs = coords.map((c) => c[0] ?? 0);
    const ys = coords.map((c) => c[1] ?? 0);
    expect(xs[0]).toBe(10);
    expect(xs[2]).toBe(90);
    expect(xs[0]).toBeLessThan(xs[1] ?? 0);
    expect(ys[0]).toBe(40); // score 0 sits at the bottom
    expect(ys[2]).toBe(10); // score 1 at the top
  });

  it("clamps scores outside [0, 1] instead of leaving the box", () => {
    const points = curvePoints([0, 1], [-0.5, 1.5], 100, 50, 10);
    for (const pair of points.split(" ")) {
      const y = Number(pair.split(",")[1]);
      expect(y).toBeGreaterThanOrEqual(10);
      expect(y).toBeLessThanOrEqual(40);
    }
  });

  it("draws one curve per followed node", () => {
    const table: SweepTable = {
      nodes: [
        ["ANC", "clinic", 1],
        ["LAB", "lab", 2],
      ],
      entries: [
        { w1: 0, w2: 0.5, alpha: 0.85, scores: [0.1, 0.9] },
        { w1: 1, w2: 0.5, alpha: 0.85, scores: [0.8, 0.2] },
      ],
    };
    const svg = sweepSvg(table, "w1");
    expect(svg.match(/<polyline/g)).toHaveLength(2);
    expect(svg).toContain("ANC, clinic, 1");
  });
});

describe("model rendering", () => {
  it("shows the aspect tuple and score in the tooltip", () => {
    const node = DOC.nodes[1];
    expect(node).toBeDefined();
    if (node) expect(nodeTitle(node)).toBe("(ANC, clinic, 1) — 0.8");
  });

  it("renders every node and edge with bin colours from the palette", () => {
    const svg = modelSvg(DOC);
    expect(svg.match(/<g class="node/g)).toHaveLength(3);
    expect(svg.match(/<circle/g)).toHaveLength(1); // the virtual endpoint
    expect(svg.match(/<g class="edge"/g)).toHaveLength(1);
    expect(svg).toContain(`stroke="${EDGE_COLORS[2]}"`);
    expect(svg).toContain("7 patients, 12 transitions");
    expect(svg).toContain("(ANC, clinic, 1)");
  });

  it("renders the interval legend from the server bins", () => {
    const svg = modelSvg(DOC);
    expect(svg).toContain("0–2");
    expect(svg).toContain("2–5");
    expect(svg).toContain("5–9");
  });

  it("lays lanes out as rows and columns as slots", () => {
    const svg = modelSvg(DOC);
    // the clinic-lane node sits above the lab-lane node, and in an
    // earlier column than it
    const anc = svg.match(/<rect x="(\d+)" y="(\d+)"[^>]*stroke="#2e7d32"/);
    expect(anc).not.toBeNull();
    const rects = [...svg.matchAll(/<rect x="(\d+)" y="(\d+)" width="96"/g)];
    expect(rects).toHaveLength(2);
    const [a, b] = rects;
    if (a && b) {
      expect(Number(a[1])).toBeLessThan(Number(b[1])); // ANC left of LAB
      expect(Number(a[2])).toBeLessThan(Number(b[2])); // clinic row above lab row
    }
  });

  it("picks the highest scored real nodes to follow", () => {
    const picked = pinnedNodes(DOC, 1);
    expect(picked).toEqual([["ANC", "clinic", 1]]);
    expect(pinnedNodes(DOC)).toHaveLength(2); // virtual endpoint never followed
  });
});

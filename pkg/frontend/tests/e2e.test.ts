/** End-to-end checks against the real service.
 *
 * One server process is booted for the whole file; every request goes
 * through the same typed client the browser uses, so these tests pin
 * the UI's external contract:
 *
 *   - tightening any tuner threshold never grows the displayed lists;
 *   - an explorer state restored from its URL reproduces the identical
 *     rendered document, and the zero-damping slider position orders
 *     nodes exactly as the scoring endpoint does;
 *   - the profile view's CSV download link yields byte-identical data
 *     to the service's own CSV rendition.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { createHash } from "node:crypto";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { modelBody } from "../src/explorer.js";
import { clamp, defaults, fromQuery, toQuery, type ExplorerState } from "../src/state.js";
import { displayedCodeCount, previewBody, tunerDefaults, tunerView } from "../src/tuner.js";
import type { ModelDoc, ParseSpec, PreviewReport } from "../src/types.js";

const PORT = 8700 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;
const PARSE: ParseSpec = {
  case_column: "case",
  time_column: "date",
  perspective_columns: { intervention: "act", occupation: "occ", unit: "unit" },
};

let server: ChildProcess | undefined;
let dataDir = "";
let stderr = "";
const client = new Client(BASE);

async function waitReady(timeoutMs = 90_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    if (server?.exitCode !== null && server?.exitCode !== undefined) {
      throw new Error(`server exited early (${server.exitCode}):\n${stderr}`);
    }
    try {
      const res = await fetch(`${BASE}/datasets`);
      if (res.ok) return;
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) throw new Error(`server not ready:\n${stderr}`);
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "pathway-ui-e2e-"));
  server = spawn(
    "python3",
    ["-m", "magpath.cli", "--data-dir", dataDir, "serve", "--host", "127.0.0.1", "--port", String(PORT)],
    { stdio: ["ignore", "ignore", "pipe"] },
  );
  server.stderr?.on("data", (chunk: Buffer) => {
    stderr += chunk.toString();
  });
  await waitReady();
});

afterAll(() => {
  server?.kill("SIGTERM");
  if (dataDir !== "") rmSync(dataDir, { recursive: true, force: true });
});

/* ------------------------------------------------------------ fixtures */

function expand(counts: Record<string, number>): string[] {
  const out: string[] = [];
  for (const [code, n] of Object.entries(counts)) {
    for (let i = 0; i < n; i += 1) out.push(code);
  }
  return out;
}

/** Event log whose rows realise the given per-code totals, spread over
 * `nCases` cases with one event per day. */
function countedCsv(
  nCases: number,
  procs: Record<string, number>,
  occs: Record<string, number>,
): string {
  const acts = expand(procs);
  const jobs = expand(occs);
  if (acts.length !== jobs.length) throw new Error("fixture counts must agree");
  const rows = ["case,date,act,occ,unit"];
  const day0 = Date.UTC(2014, 0, 1);
  for (let i = 0; i < acts.length; i += 1) {
    const caseId = `p${i % nCases}`;
    const date = new Date(day0 + Math.floor(i / nCases) * 86_400_000)
      .toISOString()
      .slice(0, 10);
    rows.push(`${caseId},${date},${acts[i]},${jobs[i]},ward`);
  }
  return rows.join("\n") + "\n";
}

/** Two sharply different care styles: the cluster step must separate
 * them, and the model view gets two distinct tempos to bin. */
function pathsCsv(): string {
  const rows = ["case,date,act,occ,unit"];
  const styles = [
    { prefix: "A", acts: ["ANC", "USS", "PT", "ANC", "USS", "PT"], occ: ["midwife", "gp"], unit: "clinic", stepDays: 7 },
    { prefix: "B", acts: ["XR", "LAB", "CT", "XR", "LAB", "CT"], occ: ["radiologist", "technician"], unit: "lab", stepDays: 30 },
  ];
  const day0 = Date.UTC(2014, 0, 1);
  for (const style of styles) {
    for (let c = 0; c < 4; c += 1) {
      const length = 4 + (c % 3);
      for (let i = 0; i < length; i += 1) {
        const date = new Date(day0 + (c + i * style.stepDays) * 86_400_000)
          .toISOString()
          .slice(0, 10);
        const act = style.acts[i % style.acts.length];
        const occ = style.occ[i % style.occ.length];
        rows.push(`${style.prefix}${c},${date},${act},${occ},${style.unit}`);
      }
    }
  }
  return rows.join("\n") + "\n";
}

const sha256 = (text: string): string => createHash("sha256").update(text).digest("hex");

/* ------------------------------------------------------- threshold tuner */

describe("threshold tuner against the live service", () => {
  let cohortId = "";
  let controlId = "";

  beforeAll(async () => {
    const cohort = await client.uploadDataset({
      name: "tuner-cohort",
      format: "csv",
      parse: PARSE,
      content: countedCsv(
        12,
        { ANC: 60, USS: 40, PT: 24, ECHO: 12, XR: 6, LAB: 3 },
        { midwife: 80, gp: 40, nurse: 25 },
      ),
    });
    const control = await client.uploadDataset({
      name: "tuner-control",
      format: "csv",
      parse: PARSE,
      content: countedCsv(
        12,
        { ANC: 10, USS: 10, PT: 10, ECHO: 10, XR: 10, LAB: 10 },
        { midwife: 10, gp: 10, nurse: 40 },
      ),
    });
    cohortId = cohort.id;
    controlId = control.id;
  });

  async function preview(patch: Partial<ReturnType<typeof tunerDefaults>>): Promise<PreviewReport> {
    const thresholds = { ...tunerDefaults(), thetaP: 0, minP: 0, thetaO: 0, minO: 0, ...patch };
    return client.filterPreview(cohortId, previewBody(controlId, thresholds));
  }

  function ladder(name: string, values: number[], key: "thetaP" | "minP" | "thetaO" | "minO") {
    it(`raising ${name} never grows the displayed lists`, async () => {
      let previous: PreviewReport | null = null;
      let firstCount = 0;
      let lastCount = 0;
      for (const value of values) {
        const report = await preview({ [key]: value });
        const rendered = tunerView(report, null);
        const count = displayedCodeCount(rendered);
        if (previous !== null) {
          // every survivor was already in the looser list
          for (const code of report.typical_procedures) {
            expect(previous.typical_procedures).toContain(code);
          }
          for (const code of report.typical_occupations) {
            expect(previous.typical_occupations).toContain(code);
          }
          expect(count).toBeLessThanOrEqual(displayedCodeCount(tunerView(previous, null)));
        } else {
          firstCount = count;
        }
        lastCount = count;
        previous = report;
      }
      // the ladder actually bites: the strictest step lost codes
      expect(lastCount).toBeLessThan(firstCount);
    });
  }

  ladder("the procedure ratio threshold", [0, 0.3, 0.6, 1.0, 1.8, 2.6, 8, 50], "thetaP");
  ladder("the procedure count floor", [0, 4, 10, 30, 50, 100], "minP");
  ladder("the occupation ratio threshold", [0, 0.3, 0.8, 2, 5, 40], "thetaO");
  ladder("the occupation count floor", [0, 12, 30, 60, 200], "minO");

  it("lowering the count ceiling never grows the lists either", async () => {
    let previous: PreviewReport | null = null;
    for (const maxP of [1000, 50, 30, 10, 1]) {
      const report = await preview({ maxP });
      if (previous !== null) {
        for (const code of report.typical_procedures) {
          expect(previous.typical_procedures).toContain(code);
        }
      }
      previous = report;
    }
  });

  it("keeps the panel usable when the service rejects the request", async () => {
    const err = await client
      .filterPreview(cohortId, previewBody("not-a-dataset", tunerDefaults()))
      .then(() => null, (e: unknown) => e);
    expect(err).not.toBeNull();
    const report = await preview({});
    const html = tunerView(report, String(err));
    // the inline error does not blank the lists
    expect(html).toContain('class="error"');
    expect(displayedCodeCount(html)).toBeGreaterThan(0);
  });
});

/* ----------------------------------------------------- relevance explorer */

describe("relevance explorer against the live service", () => {
  let datasetId = "";
  let magId = "";

  beforeAll(async () => {
    const dataset = await client.uploadDataset({
      name: "paths",
      format: "csv",
      parse: PARSE,
      content: pathsCsv(),
    });
    datasetId = dataset.id;
    const mag = await client.makeMag(datasetId, ["intervention", "occupation", "unit"]);
    magId = mag.id;
    expect(mag.patients).toBe(8);
  });

  it("reproduces the identical document from a URL-restored state", async () => {
    const state: ExplorerState = {
      ...defaults(),
      dataset: datasetId,
      mag: magId,
      w1: 0.3,
      w2: 0.45,
      alpha: 0.6,
      minRelevance: 0,
      laneAspect: "unit",
      hideBelow: 0,
      bins: 4,
      showEndpoints: true,
    };
    const first: ModelDoc = await client.model(magId, modelBody(state));
    expect(first.nodes.length).toBeGreaterThan(0);
    // two distinct tempos in the fixture: duplicate quantile edges merge,
    // so the bin count is capped by the data, never above the request
    expect(first.legend.interval_bins.length).toBeGreaterThanOrEqual(1);
    expect(first.legend.interval_bins.length).toBeLessThanOrEqual(4);

    const restored = fromQuery(toQuery(state));
    expect(restored).toEqual(clamp(state));
    const second: ModelDoc = await client.model(restored.mag, modelBody(restored));
    expect(sha256(JSON.stringify(second))).toBe(sha256(JSON.stringify(first)));
    expect(second).toEqual(first);
  });

  it("orders nodes at zero damping exactly as the scoring endpoint", async () => {
    const scores = await client.relevance(magId, { w1: 0.5, w2: 0.5, alpha: 0 });
    const fromEndpoint = scores.scores
      .map((s) => ({ key: JSON.stringify(s.node), score: s.score }))
      .sort((a, b) => b.score - a.score || (a.key < b.key ? -1 : 1));

    const doc = await client.model(magId, modelBody({
      ...defaults(),
      dataset: datasetId,
      mag: magId,
      w1: 0.5,
      w2: 0.5,
      alpha: 0,
      minRelevance: 0,
      showEndpoints: false,
    }));
    const fromModel = doc.nodes
      .filter((n) => !n.virtual)
      .map((n) => ({ key: JSON.stringify(JSON.parse(n.id)), score: n.relevance ?? 0 }))
      .sort((a, b) => b.score - a.score || (a.key < b.key ? -1 : 1));

    expect(fromModel.map((n) => n.key)).toEqual(fromEndpoint.map((n) => n.key));
    for (let i = 0; i < fromModel.length; i += 1) {
      expect(fromModel[i]!.score).toBeCloseTo(fromEndpoint[i]!.score, 12);
    }
  });

  it("serves the same document as graphviz source on demand", async () => {
    const dot = await client.modelDot(magId, modelBody({
      ...defaults(),
      dataset: datasetId,
      mag: magId,
    }));
    expect(dot.startsWith("digraph")).toBe(true);
  });
});

/* -------------------------------------------------------- cluster profile */

describe("cluster profile against the live service", () => {
  let clustersId = "";

  beforeAll(async () => {
    const dataset = await client.uploadDataset({
      name: "paths-profile",
      format: "csv",
      parse: PARSE,
      content: pathsCsv(),
    });
    const mag = await client.makeMag(dataset.id, ["intervention", "occupation", "unit"]);
    const matrixJob = await client.waitForJob((await client.startMatrix(mag.id, {})).id);
    expect(matrixJob.state).toBe("done");
    expect(matrixJob.result).not.toBeNull();
    const clusterJob = await client.waitForJob(
      (await client.startClusters(matrixJob.result!, { runs: 6, seeds: 2 })).id,
    );
    expect(clusterJob.state).toBe("done");
    expect(clusterJob.result).not.toBeNull();
    clustersId = clusterJob.result!;
  });

  it("downloads a CSV byte-identical to the server's own rendition", async () => {
    const viaLink = await client.profileCsv(clustersId);
    const direct = await (await fetch(`${BASE}/clusters/${clustersId}/profile?fmt=csv`)).text();
    expect(viaLink.startsWith("cluster,patients,")).toBe(true);
    expect(Buffer.from(viaLink).equals(Buffer.from(direct))).toBe(true);
  });

  it("renders the live profile with the cluster sizes in the headers", async () => {
    const doc = await client.profile(clustersId);
    expect(doc.clusters.length).toBeGreaterThanOrEqual(2);
    const { profileTable } = await import("../src/profile.js");
    const html = profileTable(doc);
    for (const cluster of doc.clusters) {
      expect(html).toContain(`N_P=${cluster.patients}`);
    }
  });
});

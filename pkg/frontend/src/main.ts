/** Browser bootstrap: wires the three views to the service.
 *
 * All rendering goes through the pure modules; this file only reads
 * controls, schedules requests (debounced, last-write-wins) and writes
 * innerHTML.  It is the one module that touches the DOM.
 */

import { ApiError, Client } from "./api.js";
import {
  modelBody,
  modelSvg,
  pinnedNodes,
  sweepSpec,
  sweepSvg,
  type SweepAxis,
} from "./explorer.js";
import { debounce, Sequencer, SLIDER_DEBOUNCE_MS } from "./seq.js";
import { clamp, defaults, fromQuery, toQuery, type ExplorerState } from "./state.js";
import { profileTable, type ProfileSort } from "./profile.js";
import {
  displayedCodeCount,
  parseOptionalThreshold,
  parseThreshold,
  previewBody,
  tunerDefaults,
  tunerView,
  type TunerThresholds,
} from "./tuner.js";
import type { ModelDoc, NodeId, ProfileDoc } from "./types.js";

const client = new Client("");

function must<T extends Element>(selector: string): T {
  const el = document.querySelector(selector);
  if (el === null) throw new Error(`missing element: ${selector}`);
  return el as T;
}

function message(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

/* ---------------------------------------------------------------- tabs */

function initTabs(): void {
  const buttons = document.querySelectorAll<HTMLButtonElement>("nav button[data-tab]");
  buttons.forEach((button) => {
    button.addEventListener("click", () => {
      buttons.forEach((b) => b.classList.toggle("active", b === button));
      document.querySelectorAll<HTMLElement>("main > section").forEach((section) => {
        section.hidden = section.id !== button.dataset.tab;
      });
    });
  });
}

/* ------------------------------------------------------------- datasets */

async function refreshDatasets(): Promise<void> {
  const listing = await client.listDatasets();
  const options = listing.datasets
    .map((d) => `<option value="${d.id}">${d.name}</option>`)
    .join("");
  document.querySelectorAll<HTMLSelectElement>("select.dataset-pick").forEach((select) => {
    const keep = select.value;
    select.innerHTML = options;
    if (listing.datasets.some((d) => d.id === keep)) select.value = keep;
  });
}

/* ---------------------------------------------------------------- tuner */

function initTuner(): void {
  const thresholds: TunerThresholds = tunerDefaults();
  const out = must<HTMLElement>("#tuner-preview");
  const status = must<HTMLElement>("#tuner-status");
  const seq = new Sequencer();
  let lastReport: Parameters<typeof tunerView>[0] = null;

  const refresh = debounce(SLIDER_DEBOUNCE_MS, () => void run());
  async function run(): Promise<void> {
    const cohort = must<HTMLSelectElement>("#tuner-cohort").value;
    const control = must<HTMLSelectElement>("#tuner-control").value;
    if (cohort === "" || control === "") return;
    const ticket = seq.issue();
    try {
      const report = await client.filterPreview(cohort, previewBody(control, thresholds));
      if (!seq.accept(ticket)) return;
      lastReport = report;
      out.innerHTML = tunerView(report, null);
      status.textContent = `${displayedCodeCount(out.innerHTML)} codes listed`;
    } catch (err) {
      if (!seq.accept(ticket)) return;
      out.innerHTML = tunerView(lastReport, message(err));
    }
  }

  const bind = (id: string, apply: (raw: string) => void): void => {
    const input = must<HTMLInputElement>(id);
    input.addEventListener("input", () => {
      apply(input.value);
      refresh();
    });
  };
  bind("#theta-p", (raw) => (thresholds.thetaP = parseThreshold(raw, thresholds.thetaP)));
  bind("#min-p", (raw) => (thresholds.minP = parseThreshold(raw, thresholds.minP)));
  bind("#max-p", (raw) => (thresholds.maxP = parseOptionalThreshold(raw, thresholds.maxP)));
  bind("#theta-o", (raw) => (thresholds.thetaO = parseThreshold(raw, thresholds.thetaO)));
  bind("#min-o", (raw) => (thresholds.minO = parseThreshold(raw, thresholds.minO)));
  bind("#max-o", (raw) => (thresholds.maxO = parseOptionalThreshold(raw, thresholds.maxO)));
  must<HTMLSelectElement>("#tuner-cohort").addEventListener("change", refresh);
  must<HTMLSelectElement>("#tuner-control").addEventListener("change", refresh);

  must<HTMLButtonElement>("#tuner-apply").addEventListener("click", () => {
    void (async () => {
      const cohort = must<HTMLSelectElement>("#tuner-cohort").value;
      const control = must<HTMLSelectElement>("#tuner-control").value;
      try {
        const name = `filtered-${Date.now().toString(36)}`;
        const applied = await client.filterApply(cohort, {
          ...previewBody(control, thresholds),
          name,
        });
        status.textContent =
          `Filtered dataset "${applied.name}" created: ` +
          `${applied.cases} cases, ${applied.events} events` +
          (applied.emptied_cases.length > 0
            ? ` (${applied.emptied_cases.length} cases emptied)`
            : "");
        await refreshDatasets();
      } catch (err) {
        out.innerHTML = tunerView(lastReport, message(err));
      }
    })();
  });
}

/* ------------------------------------------------------------- explorer */

function readExplorerControls(state: ExplorerState): ExplorerState {
  const value = (id: string): number => Number(must<HTMLInputElement>(id).value);
  return clamp({
    ...state,
    w1: value("#w1"),
    w2: value("#w2"),
    alpha: value("#alpha"),
    minRelevance: value("#min-rel"),
    maxRelevance:
      must<HTMLInputElement>("#max-rel").value.trim() === "" ? null : value("#max-rel"),
    laneAspect: must<HTMLSelectElement>("#lane-aspect").value,
    hideBelow: value("#hide-below"),
    bins: value("#bins"),
    showEndpoints: must<HTMLInputElement>("#show-ends").checked,
  });
}

function writeExplorerControls(state: ExplorerState): void {
  must<HTMLInputElement>("#w1").value = String(state.w1);
  must<HTMLInputElement>("#w2").value = String(state.w2);
  must<HTMLInputElement>("#alpha").value = String(state.alpha);
  must<HTMLInputElement>("#min-rel").value = String(state.minRelevance);
  must<HTMLInputElement>("#max-rel").value =
    state.maxRelevance === null ? "" : String(state.maxRelevance);
  must<HTMLSelectElement>("#lane-aspect").value = state.laneAspect;
  must<HTMLInputElement>("#hide-below").value = String(state.hideBelow);
  must<HTMLInputElement>("#bins").value = String(state.bins);
  must<HTMLInputElement>("#show-ends").checked = state.showEndpoints;
}

function initExplorer(initial: ExplorerState): void {
  let state = initial;
  let pinned: NodeId[] = [];
  const modelOut = must<HTMLElement>("#model-view");
  const sweepOut = must<HTMLElement>("#sweep-view");
  const errOut = must<HTMLElement>("#explorer-error");
  const seq = new Sequencer();

  writeExplorerControls(state);

  async function run(): Promise<void> {
    if (state.mag === "") return;
    const ticket = seq.issue();
    const axis = must<HTMLSelectElement>("#sweep-axis").value as SweepAxis;
    try {
      const doc: ModelDoc = await client.model(state.mag, modelBody(state));
      if (!seq.accept(ticket)) return;
      if (pinned.length === 0) pinned = pinnedNodes(doc);
      modelOut.innerHTML = modelSvg(doc);
      errOut.textContent = "";
      if (pinned.length > 0) {
        const table = await client.sweep(state.mag, sweepSpec(state, axis, pinned));
        if (seq.current === ticket) sweepOut.innerHTML = sweepSvg(table, axis);
      }
    } catch (err) {
      if (!seq.accept(ticket)) return;
      errOut.textContent = message(err);
    }
  }

  const refresh = debounce(SLIDER_DEBOUNCE_MS, () => {
    state = readExplorerControls(state);
    history.replaceState(null, "", `?${toQuery(state)}`);
    void run();
  });

  [
    "#w1",
    "#w2",
    "#alpha",
    "#min-rel",
    "#max-rel",
    "#hide-below",
    "#bins",
  ].forEach((id) => must<HTMLInputElement>(id).addEventListener("input", refresh));
  must<HTMLSelectElement>("#lane-aspect").addEventListener("change", refresh);
  must<HTMLInputElement>("#show-ends").addEventListener("change", refresh);
  must<HTMLSelectElement>("#sweep-axis").addEventListener("change", refresh);

  must<HTMLButtonElement>("#build-mag").addEventListener("click", () => {
    void (async () => {
      const dataset = must<HTMLSelectElement>("#explorer-dataset").value;
      if (dataset === "") return;
      try {
        const aspects = must<HTMLInputElement>("#mag-aspects").value
          .split(",")
          .map((a) => a.trim())
          .filter((a) => a !== "");
        const info = await client.makeMag(dataset, aspects);
        state = { ...state, dataset, mag: info.id };
        pinned = [];
        history.replaceState(null, "", `?${toQuery(state)}`);
        must<HTMLElement>("#mag-info").textContent =
          `${info.nodes} nodes, ${info.edges} edges over ${info.patients} patients`;
        void run();
      } catch (err) {
        errOut.textContent = message(err);
      }
    })();
  });

  if (state.mag !== "") void run();
}

/* -------------------------------------------------------------- profile */

function initProfile(): void {
  const out = must<HTMLElement>("#profile-view");
  const errOut = must<HTMLElement>("#profile-error");
  let doc: ProfileDoc | null = null;
  let sort: ProfileSort = { by: "pair", desc: false };

  function render(): void {
    if (doc === null) return;
    out.innerHTML = profileTable(doc, sort);
    out.querySelectorAll<HTMLTableCellElement>("thead th").forEach((th) => {
      th.addEventListener("click", () => {
        const col = th.dataset.col;
        if (col === undefined) return;
        const by = col === "pair" ? "pair" : Number(col);
        sort = { by, desc: sort.by === by ? !sort.desc : true };
        render();
      });
    });
  }

  must<HTMLButtonElement>("#profile-load").addEventListener("click", () => {
    void (async () => {
      const clustersId = must<HTMLInputElement>("#clusters-id").value.trim();
      if (clustersId === "") return;
      try {
        doc = await client.profile(clustersId);
        errOut.textContent = "";
        const link = must<HTMLAnchorElement>("#profile-csv");
        link.href = client.profileCsvUrl(clustersId);
        link.hidden = false;
        render();
      } catch (err) {
        errOut.textContent = message(err);
      }
    })();
  });
}

/* ------------------------------------------------------------ bootstrap */

function boot(): void {
  initTabs();
  const state = location.search === "" ? defaults() : fromQuery(location.search);
  initTuner();
  initExplorer(state);
  initProfile();
  void refreshDatasets().catch(() => {
    /* the service may have no datasets yet; selects stay empty */
  });
}

document.addEventListener("DOMContentLoaded", boot);

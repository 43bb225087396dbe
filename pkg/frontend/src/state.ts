/** Explorer view state and its URL round trip.
 *
 * The whole explorer is reproducible from a query string: dataset and
 * graph ids, the three relevance weights, the displayed relevance band,
 * and the render options.  `fromQuery(toQuery(s))` returns the clamped
 * state exactly — numbers survive because a JS float prints in its
 * shortest form and parses back to the same bits.
 */

export interface ExplorerState {
  dataset: string;
  mag: string;
  /** Cluster artifact to restrict relevance to, with the member index. */
  clusters: string | null;
  clusterIndex: number | null;
  w1: number;
  w2: number;
  alpha: number;
  minRelevance: number;
  maxRelevance: number | null;
  laneAspect: string;
  /** Edges seen by fewer distinct patients than this are hidden. */
  hideBelow: number;
  /** Number of interval colour bins. */
  bins: number;
  showEndpoints: boolean;
}

/** Largest damping the sliders can reach; the blend requires alpha < 1. */
export const ALPHA_MAX = 0.99;

/** Size of the colour palette, and so the most bins worth requesting. */
export const MAX_BINS = 7;

export function defaults(): ExplorerState {
  return {
    dataset: "",
    mag: "",
    clusters: null,
    clusterIndex: null,
    w1: 0.5,
    w2: 0.5,
    alpha: 0.85,
    minRelevance: 0,
    maxRelevance: null,
    laneAspect: "unit",
    hideBelow: 0,
    bins: 5,
    showEndpoints: true,
  };
}

const clamp01 = (x: number): number => Math.min(1, Math.max(0, x));

/** Force every numeric field into its legal range. */
export function clamp(s: ExplorerState): ExplorerState {
  return {
    ...s,
    w1: clamp01(s.w1),
    w2: clamp01(s.w2),
    alpha: Math.min(ALPHA_MAX, Math.max(0, s.alpha)),
    minRelevance: Math.max(0, s.minRelevance),
    maxRelevance: s.maxRelevance === null ? null : Math.max(0, s.maxRelevance),
    clusterIndex: s.clusterIndex === null ? null : Math.max(0, Math.floor(s.clusterIndex)),
    hideBelow: Math.max(0, Math.floor(s.hideBelow)),
    bins: Math.min(MAX_BINS, Math.max(1, Math.floor(s.bins))),
  };
}

export function toQuery(state: ExplorerState): string {
  const s = clamp(state);
  const q = new URLSearchParams();
  q.set("dataset", s.dataset);
  q.set("mag", s.mag);
  if (s.clusters !== null) q.set("clusters", s.clusters);
  if (s.clusterIndex !== null) q.set("ci", String(s.clusterIndex));
  q.set("w1", String(s.w1));
  q.set("w2", String(s.w2));
  q.set("alpha", String(s.alpha));
  q.set("min", String(s.minRelevance));
  if (s.maxRelevance !== null) q.set("max", String(s.maxRelevance));
  q.set("lane", s.laneAspect);
  q.set("hide", String(s.hideBelow));
  q.set("bins", String(s.bins));
  q.set("ends", s.showEndpoints ? "1" : "0");
  return q.toString();
}

export function fromQuery(query: string): ExplorerState {
  const q = new URLSearchParams(query);
  const d = defaults();
  const num = (key: string, fallback: number): number => {
    const raw = q.get(key);
    if (raw === null) return fallback;
    const value = Number(raw);
    return Number.isFinite(value) ? value : fallback;
  };
  const numOrNull = (key: string, fallback: number | null): number | null => {
    const raw = q.get(key);
    if (raw === null) return fallback;
    const value = Number(raw);
    return Number.isFinite(value) ? value : fallback;
  };
  return clamp({
    dataset: q.get("dataset") ?? d.dataset,
    mag: q.get("mag") ?? d.mag,
    clusters: q.get("clusters"),
    clusterIndex: numOrNull("ci", null),
    w1: num("w1", d.w1),
    w2: num("w2", d.w2),
    alpha: num("alpha", d.alpha),
    minRelevance: num("min", d.minRelevance),
    maxRelevance: numOrNull("max", null),
    laneAspect: q.get("lane") ?? d.laneAspect,
    hideBelow: num("hide", d.hideBelow),
    bins: num("bins", d.bins),
    showEndpoints: q.get("ends") !== "0",
  });
}

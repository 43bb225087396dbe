/** Threshold tuner: six filter controls with a live preview of the code
 * lists they keep.
 *
 * The view only displays what `/filter/preview` returns — the ratio
 * arithmetic lives server-side.  Failed previews render inline and the
 * controls stay usable, so a bad value never locks the panel.
 */

import { esc } from "./html.js";
import type { PreviewBody, PreviewReport, ThresholdBody } from "./types.js";

export interface TunerThresholds {
  thetaP: number;
  minP: number;
  maxP: number | null;
  thetaO: number;
  minO: number;
  maxO: number | null;
}

export function tunerDefaults(): TunerThresholds {
  return { thetaP: 6, minP: 10, maxP: null, thetaO: 10, minO: 50, maxO: null };
}

/** Map the six controls onto the service's threshold names. */
export function thresholdsBody(t: TunerThresholds): ThresholdBody {
  return {
    theta_p: t.thetaP,
    min_p: t.minP,
    max_p: t.maxP,
    theta_o: t.thetaO,
    min_o: t.minO,
    max_o: t.maxO,
  };
}

export function previewBody(control: string, t: TunerThresholds, sampleSize = 8): PreviewBody {
  return { control, thresholds: thresholdsBody(t), sample_size: sampleSize };
}

/** Parse one control's text; junk or a negative keeps the previous value. */
export function parseThreshold(raw: string, previous: number): number {
  const trimmed = raw.trim();
  if (trimmed === "") return previous;
  const value = Number(trimmed);
  if (!Number.isFinite(value) || value < 0) return previous;
  return value;
}

/** Parse an optional upper bound; empty means unbounded. */
export function parseOptionalThreshold(raw: string, previous: number | null): number | null {
  const trimmed = raw.trim();
  if (trimmed === "") return null;
  const value = Number(trimmed);
  if (!Number.isFinite(value) || value < 0) return previous;
  return value;
}

function codeList(title: string, codes: string[]): string {
  const items = codes.map((code) => `<li>${esc(code)}</li>`).join("");
  return `<section class="code-list"><h3>${esc(title)} <span class="count">(${codes.length})</span></h3><ul>${items}</ul></section>`;
}

/** Render the preview panel.  `report` may be null while the first
 * request is in flight; `error` is shown inline and never hides the
 * last good lists. */
export function tunerView(report: PreviewReport | null, error: string | null): string {
  const parts: string[] = [];
  if (error !== null) {
    parts.push(`<p class="error" role="alert">${esc(error)}</p>`);
  }
  if (report === null) {
    parts.push('<p class="pending">Waiting for the first preview…</p>');
    return parts.join("");
  }
  const procedures = [...report.typical_procedures].sort();
  const occupations = [...report.typical_occupations].sort();
  if (procedures.length === 0 && occupations.length === 0) {
    parts.push('<p class="empty">No codes pass the current thresholds.</p>');
  } else {
    parts.push(codeList("Typical procedures", procedures));
    parts.push(codeList("Typical occupations", occupations));
  }
  if (report.passing_events !== null) {
    parts.push(`<p class="passing">${report.passing_events} events would remain.</p>`);
  }
  return parts.join("");
}

/** Count the codes a rendered preview displays (both lists). */
export function displayedCodeCount(viewHtml: string): number {
  return (viewHtml.match(/<li>/g) ?? []).length;
}

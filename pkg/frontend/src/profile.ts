/** Cluster profile view: heat-shaded frequency tables.
 *
 * Rows are transition pairs, columns are clusters; a cell shows the
 * pair's relative frequency in that cluster, shaded monotonically so a
 * darker cell always means a more frequent pair.  The CSV download is
 * the server's own rendition — the link points at the `fmt=csv` URL, so
 * the saved bytes are exactly what the service produced.
 */

import { esc, fmt } from "./html.js";
import type { ProfileDoc } from "./types.js";

export interface PairRow {
  pair: string;
  /** One frequency per cluster; null where the pair is not listed. */
  freqs: (number | null)[];
}

export type ProfileSortKey = "pair" | number;

export interface ProfileSort {
  by: ProfileSortKey;
  desc: boolean;
}

/** Union the clusters' pair lists into rows, one column per cluster. */
export function pairRows(doc: ProfileDoc): PairRow[] {
  const index = new Map<string, PairRow>();
  const nClusters = doc.clusters.length;
  doc.clusters.forEach((cluster, c) => {
    for (const { pair, frequency } of cluster.top_pairs) {
      const label = `${pair[0]} → ${pair[1]}`;
      let row = index.get(label);
      if (row === undefined) {
        row = { pair: label, freqs: new Array<number | null>(nClusters).fill(null) };
        index.set(label, row);
      }
      row.freqs[c] = frequency;
    }
  });
  return [...index.values()].sort((a, b) => (a.pair < b.pair ? -1 : a.pair > b.pair ? 1 : 0));
}

/** Stable sort of the rows by pair label or by one cluster's column. */
export function sortRows(rows: PairRow[], sort: ProfileSort): PairRow[] {
  const out = [...rows];
  const direction = sort.desc ? -1 : 1;
  out.sort((a, b) => {
    let delta: number;
    if (sort.by === "pair") {
      delta = a.pair < b.pair ? -1 : a.pair > b.pair ? 1 : 0;
    } else {
      delta = (a.freqs[sort.by] ?? -1) - (b.freqs[sort.by] ?? -1);
    }
    if (delta !== 0) return direction * delta;
    return a.pair < b.pair ? -1 : a.pair > b.pair ? 1 : 0;
  });
  return out;
}

/** Cell background whose opacity grows with the value. */
export function shade(value: number, max: number): string {
  const ratio = max > 0 ? Math.min(1, Math.max(0, value / max)) : 0;
  return `rgba(21, 101, 82, ${fmt(ratio, 3)})`;
}

function headerCell(text: string, sub: string): string {
  return `<th scope="col">${esc(text)}<br><span class="sub">${esc(sub)}</span></th>`;
}

/** Render the profile as a sortable heat table.  Column headers carry
 * the cluster size (N_P) and mean pathway length (μ). */
export function profileTable(doc: ProfileDoc, sort: ProfileSort = { by: "pair", desc: false }): string {
  const rows = sortRows(pairRows(doc), sort);
  const max = Math.max(0, ...rows.flatMap((r) => r.freqs.filter((f): f is number => f !== null)));
  const headers = doc.clusters
    .map((c, i) =>
      headerCell(
        c.label,
        `N_P=${c.patients}, μ=${fmt(c.mean_length, 1)}±${fmt(c.std_length, 1)}`,
      ).replace("<th ", `<th data-col="${i}" `),
    )
    .join("");
  const body = rows
    .map((row) => {
      const cells = row.freqs
        .map((f) => {
          if (f === null) return '<td class="absent"></td>';
          return `<td style="background:${shade(f, max)}">${fmt(f, 3)}</td>`;
        })
        .join("");
      return `<tr><th scope="row">${esc(row.pair)}</th>${cells}</tr>`;
    })
    .join("");
  const singletons =
    doc.n_singletons > 0
      ? `<p class="singletons">${doc.n_singletons} patients remain unclustered.</p>`
      : "";
  return (
    `<table class="profile"><thead><tr>` +
    `<th scope="col" data-col="pair">transition</th>${headers}` +
    `</tr></thead><tbody>${body}</tbody></table>` +
    singletons
  );
}

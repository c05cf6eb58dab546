/**
 * Policy radar: one row per operational constraint of the active profile,
 * value against limit, compliant or not. Constraints the server does not
 * evaluate come back with null value/limit and render as "not evaluated"
 * rather than being hidden.
 */

import { esc, fmtCount, fmtHzS, fmtMw, fmtPct } from "../format.js";
import type { PolicyDoc, PolicyRow } from "../types.js";

/** Per-constraint formatting; the unit differs row by row. */
export function policyValue(name: string, v: number | null): string {
  if (v === null) return "-";
  switch (name) {
    case "SNSP":
      return fmtPct(v) + " %";
    case "RoCoF":
      return fmtHzS(v) + " Hz/s";
    case "Inertia Floor":
      return fmtMw(v) + " MWs";
    case "MUON":
      return fmtCount(v);
    default:
      return String(v);
  }
}

function policyRow(row: PolicyRow): string {
  const cls =
    row.compliant === null ? "na" : row.compliant ? "ok" : "bad";
  const status =
    row.compliant === null
      ? "not evaluated"
      : row.compliant
        ? "compliant"
        : "BREACH";
  return `<tr class="${cls}" data-policy="${esc(row.name)}">
<td>${esc(row.name)}</td>
<td data-cell="value">${policyValue(row.name, row.value)}</td>
<td data-cell="limit">${policyValue(row.name, row.limit)}</td>
<td data-cell="status">${status}</td>
<td class="muted">${esc(row.note)}</td>
</tr>`;
}

export function renderPolicy(doc: PolicyDoc | null): string {
  if (doc === null) {
    return `<section class="panel"><p class="muted">loading policy state...</p></section>`;
  }
  const cls = doc.compliant ? "status ok" : "status bad";
  const word = doc.compliant ? "compliant" : "non-compliant";
  const rows = doc.rows.map(policyRow).join("");
  return `<section class="policy-view">
<div class="${cls}" data-policy-overall>profile ${esc(doc.profile)}: ${word}</div>
<table class="policy"><thead><tr><th>constraint</th><th>value</th><th>limit</th><th>status</th><th>note</th></tr></thead><tbody>${rows}</tbody></table>
</section>`;
}

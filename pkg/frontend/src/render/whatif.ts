/**
 * What-if workbench: draft a set of redispatch modifications, send them
 * to the server, and read the verdict side by side with the live base.
 *
 * Results carry a hard EPHEMERAL badge. They are never written into the
 * live fields of the console state, so navigating away and back cannot
 * confuse a study with a real cycle.
 */

import type { ApiError } from "../api.js";
import { esc, fmtCount, fmtTs } from "../format.js";
import type {
  CaseResult,
  CycleReport,
  Modification,
  WhatIfResult,
} from "../types.js";
import { policyValue } from "./policy.js";

function fmtDelta(d: number): string {
  if (d === 0) return "±0";
  return d > 0 ? `+${d}` : String(d);
}

/** Which draft row a server complaint points at, by quoted element name. */
export function errorRowIndex(message: string, draft: Modification[]): number {
  const quoted = message.match(/'([^']+)'/);
  if (!quoted) return -1;
  return draft.findIndex((m) => m.element === quoted[1]);
}

function numInput(i: number, field: string, v: number | undefined): string {
  const val = v === undefined ? "" : ` value="${v}"`;
  return `<input type="number" step="any" data-field="${field}" data-index="${i}" placeholder="${field}"${val}>`;
}

function draftRow(i: number, mod: Modification, inlineError: string | null): string {
  const online =
    mod.online === undefined ? "" : mod.online ? "on" : "off";
  const opts = ["", "on", "off"]
    .map(
      (o) =>
        `<option value="${o}"${o === online ? " selected" : ""}>${o || "leave"}</option>`,
    )
    .join("");
  const err = inlineError
    ? `<div class="row-error" data-row-error="${i}">${esc(inlineError)}</div>`
    : "";
  return `<div class="draft-row" data-draft-row="${i}">
<input type="text" data-field="element" data-index="${i}" placeholder="element id" value="${esc(mod.element)}">
${numInput(i, "p_set", mod.p_set)}
${numInput(i, "p", mod.p)}
${numInput(i, "q", mod.q)}
<select data-field="online" data-index="${i}">${opts}</select>
<button data-action="draft-remove" data-index="${i}">remove</button>
${err}
</div>`;
}

function totalsCompare(base: CycleReport, res: WhatIfResult): string {
  const rows = (["cases", "secure", "insecure", "failed"] as const)
    .map((k) => {
      const b = base.totals[k];
      const m = res.report.totals[k];
      return `<tr data-compare="${k}">
<td>${k}</td>
<td data-side="base">${fmtCount(b)}</td>
<td data-side="mod">${fmtCount(m)}</td>
<td data-side="delta" class="${m - b === 0 ? "" : m - b > 0 ? "worse" : "better"}">${fmtDelta(m - b)}</td>
</tr>`;
    })
    .join("");
  return `<table class="compare"><thead><tr><th></th><th>live base</th><th>what-if</th><th>delta</th></tr></thead><tbody>${rows}</tbody></table>`;
}

function policyCompare(base: CycleReport, res: WhatIfResult): string {
  const baseRows = new Map(base.policy.rows.map((r) => [r.name, r]));
  const rows = res.report.policy.rows
    .map((mod) => {
      const b = baseRows.get(mod.name);
      const word = (c: boolean | null) =>
        c === null ? "n/a" : c ? "ok" : "breach";
      const flipped = b !== undefined && b.compliant !== mod.compliant;
      return `<tr data-policy-delta="${esc(mod.name)}" class="${flipped ? "flip" : ""}">
<td>${esc(mod.name)}</td>
<td data-side="base">${b ? policyValue(mod.name, b.value) : "?"} ${b ? word(b.compliant) : ""}</td>
<td data-side="mod">${policyValue(mod.name, mod.value)} ${word(mod.compliant)}</td>
</tr>`;
    })
    .join("");
  return `<table class="compare"><thead><tr><th>policy</th><th>live base</th><th>what-if</th></tr></thead><tbody>${rows}</tbody></table>`;
}

const bindingKey = (c: CaseResult) =>
  c.metrics === null ? "" : [...c.metrics.binding].sort().join("|");

function bindingChanges(base: CycleReport, res: WhatIfResult): string {
  const baseBy = new Map(base.cases.map((c) => [c.id, c]));
  const changed: string[] = [];
  for (const mod of res.report.cases) {
    const b = baseBy.get(mod.id);
    if (b === undefined) continue;
    if (bindingKey(b) === bindingKey(mod)) continue;
    const before = b.metrics?.binding.join(", ") || "none";
    const after = mod.metrics?.binding.join(", ") || "none";
    changed.push(
      `<tr data-binding-delta="${esc(mod.id)}"><td>${esc(mod.id)}</td><td data-side="base">${esc(before)}</td><td data-side="mod">${esc(after)}</td></tr>`,
    );
  }
  if (changed.length === 0) return "";
  return `<h3>changed binding sets</h3><table class="compare"><thead><tr><th>contingency</th><th>live base</th><th>what-if</th></tr></thead><tbody>${changed.join("")}</tbody></table>`;
}

function comparison(base: CycleReport | null, res: WhatIfResult): string {
  const head = `<div class="ephemeral-head"><span class="badge ephemeral" data-ephemeral>EPHEMERAL</span> study on snapshot ${fmtTs(res.base_snapshot_ts)}; not archived, never shown as live</div>`;
  if (base === null) {
    return `${head}<p class="muted">live base not loaded; showing study totals only</p>
<p>insecure cases: <b data-compare="insecure" data-side="mod">${fmtCount(res.report.totals.insecure)}</b></p>`;
  }
  const drift =
    base.snapshot_ts !== res.base_snapshot_ts
      ? `<p class="muted" data-base-drift>note: live cycle has moved on since this study ran (${fmtTs(base.snapshot_ts)})</p>`
      : "";
  const bindings = bindingChanges(base, res);
  const parts = [head, drift, totalsCompare(base, res), policyCompare(base, res), bindings];
  const noTotal = (["cases", "secure", "insecure", "failed"] as const).every(
    (k) => base.totals[k] === res.report.totals[k],
  );
  const noPolicy = res.report.policy.rows.every((r) => {
    const b = base.policy.rows.find((x) => x.name === r.name);
    return b !== undefined && b.compliant === r.compliant;
  });
  if (noTotal && noPolicy && bindings === "") {
    parts.push(`<p class="muted" data-no-deltas>no deltas: the study matches the live base</p>`);
  }
  return parts.join("");
}

export function renderWhatIf(
  base: CycleReport | null,
  draft: Modification[],
  result: WhatIfResult | null,
  error: ApiError | null,
): string {
  const errIndex =
    error && error.kind === "http" ? errorRowIndex(error.message, draft) : -1;
  const rows = draft
    .map((m, i) => draftRow(i, m, i === errIndex ? error!.message : null))
    .join("");
  let panelError = "";
  if (error && errIndex === -1) {
    const retry =
      error.kind === "http" && error.retryAfterS !== undefined
        ? ` (busy, retry in ${error.retryAfterS} s)`
        : "";
    panelError = `<div class="banner lost" data-whatif-error>${esc(error.message)}${retry}</div>`;
  }
  const baseLine = base
    ? `<p class="muted">live base: cycle ${fmtTs(base.snapshot_ts)}, ${fmtCount(base.totals.insecure)} insecure of ${fmtCount(base.totals.cases)} cases</p>`
    : `<p class="muted">no live cycle yet; a study will still run against the server's current snapshot</p>`;

  const resultBlock = result
    ? `<div class="whatif-result">${comparison(base, result)}
<button data-action="whatif-promote">promote: keep these modifications as the next draft</button></div>`
    : "";

  return `<section class="whatif-view">
${baseLine}
<div class="draft">
<h3>draft modifications</h3>
${rows || '<p class="muted">empty draft; a run with no modifications re-screens the base as-is</p>'}
<div class="draft-actions">
<button data-action="draft-add">add row</button>
<button data-action="draft-clear">clear</button>
<button data-action="whatif-run" class="primary">run what-if</button>
</div>
${panelError}
</div>
${resultBlock}
</section>`;
}

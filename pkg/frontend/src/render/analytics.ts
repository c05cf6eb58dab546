/**
 * Archive analytics: the per-constraint summary table, a variable-vs-flag
 * correlation readout, and the matching scatter plot.
 */

import { esc, fmtCount, fmtPct2, fmtTs } from "../format.js";
import { parseScatterCsv, renderScatterSvg } from "../scatter.js";
import type { AnalyticsSummary, Correlation } from "../types.js";
import { ANALYTICS_FLAGS, SYSTEM_VARS } from "../types.js";

function summaryTable(s: AnalyticsSummary): string {
  const rows = s.rows
    .map(
      (r) => `<tr data-constraint="${esc(r.constraint)}">
<td>${esc(r.constraint)}</td>
<td data-cell="count">${fmtCount(r.count)}</td>
<td data-cell="pct_of_all">${fmtPct2(r.pct_of_all)}</td>
<td data-cell="pct_of_insecure">${fmtPct2(r.pct_of_insecure)}</td>
</tr>`,
    )
    .join("");
  return `<div class="panel">
<h2>binding constraints, ${fmtTs(s.from_ts)} to ${fmtTs(s.to_ts)}</h2>
<p class="muted"><span data-metric="n_cycles">${fmtCount(s.n_cycles)}</span> cycles,
<span data-metric="n_cycle_cases">${fmtCount(s.n_cycle_cases)}</span> case evaluations,
<span data-metric="n_insecure">${fmtCount(s.n_insecure)}</span> insecure
(<span data-metric="insecure_pct">${fmtPct2(s.insecure_pct)}</span> %)</p>
<table class="summary"><thead><tr><th>constraint</th><th>count</th><th>% of all</th><th>% of insecure</th></tr></thead><tbody>${rows}</tbody></table>
</div>`;
}

function correlationPanel(c: Correlation): string {
  const direction = c.r < 0 ? "lower" : c.r > 0 ? "higher" : "no different";
  return `<div class="panel" data-correlation>
<h2>${esc(c.variable)} vs ${esc(c.flag)}</h2>
<table class="kv">
<tr><td>point-biserial r</td><td data-metric="r">${c.r.toFixed(3)}</td></tr>
<tr><td>p-value</td><td data-metric="p_value">${c.p_value.toFixed(3)}</td></tr>
<tr><td>cycles</td><td data-metric="n_cycles">${fmtCount(c.n_cycles)}</td></tr>
<tr><td>flagged cycles</td><td data-metric="n_flagged">${fmtCount(c.n_flagged)}</td></tr>
<tr><td>mean when flagged</td><td><span data-metric="mean_flagged">${c.mean_flagged}</span> ${esc(c.unit)}</td></tr>
<tr><td>mean when clear</td><td><span data-metric="mean_clear">${c.mean_clear}</span> ${esc(c.unit)}</td></tr>
</table>
<p class="muted">flagged cycles sit ${direction} on ${esc(c.variable)}</p>
</div>`;
}

function controls(corrVar: string, corrFlag: string): string {
  const varOpts = SYSTEM_VARS.map(
    (v) =>
      `<option value="${v}"${v === corrVar ? " selected" : ""}>${v}</option>`,
  ).join("");
  const flagOpts = ANALYTICS_FLAGS.map(
    (f) =>
      `<option value="${esc(f)}"${f === corrFlag ? " selected" : ""}>${esc(f)}</option>`,
  ).join("");
  return `<div class="controls">
<label>variable <select data-control="corr-var">${varOpts}</select></label>
<label>flag <select data-control="corr-flag">${flagOpts}</select></label>
<button data-action="corr-run">correlate</button>
</div>`;
}

export function renderAnalytics(
  summary: AnalyticsSummary | null,
  correlation: Correlation | null,
  scatterCsv: string | null,
  corrVar: string,
  corrFlag: string,
): string {
  const parts: string[] = [];
  parts.push(
    summary
      ? summaryTable(summary)
      : `<div class="panel"><p class="muted">loading archive summary...</p></div>`,
  );
  parts.push(controls(corrVar, corrFlag));
  if (correlation) parts.push(correlationPanel(correlation));
  if (scatterCsv) {
    try {
      parts.push(
        `<div class="panel">${renderScatterSvg(parseScatterCsv(scatterCsv))}</div>`,
      );
    } catch (exc) {
      parts.push(`<div class="panel muted">scatter unavailable: ${esc(String(exc))}</div>`);
    }
  }
  return `<section class="analytics-view">${parts.join("")}</section>`;
}

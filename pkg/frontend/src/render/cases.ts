/**
 * Triage list: insecure contingencies in the server's severity order.
 *
 * The list is rendered exactly in response order; reordering here would
 * second-guess the ranking the operator is trained on. Each binding flag
 * shows its metric value next to the limit it broke.
 */

import {
  esc,
  flagBadge,
  fmtHz,
  fmtHzS,
  fmtMargin,
  fmtSeconds,
} from "../format.js";
import type {
  CaseMetrics,
  CaseResult,
  RankedCases,
  SecurityLimits,
} from "../types.js";
import { CASE_FLAGS } from "../types.js";

interface FlagReading {
  value: string;
  limit: string;
}

function reading(
  flag: string,
  m: CaseMetrics,
  lim: SecurityLimits,
): FlagReading {
  switch (flag) {
    case "RoCoF-":
      return { value: fmtHzS(m.rocof_min), limit: fmtHzS(-lim.rocof_limit) };
    case "RoCoF+":
      return { value: fmtHzS(m.rocof_max), limit: fmtHzS(lim.rocof_limit) };
    case "Nadir":
      return { value: fmtHz(m.nadir), limit: fmtHz(lim.nadir_limit) };
    case "Zenith":
      return { value: fmtHz(m.zenith), limit: fmtHz(lim.zenith_limit) };
    case "RotorAngle":
      return { value: fmtMargin(m.angle_margin), limit: "0.000" };
    case "Voltage":
      return {
        value: "out of band",
        limit: `${lim.v_min_pu}..${lim.v_max_pu} pu`,
      };
    default:
      return { value: "?", limit: "?" };
  }
}

function bindingCell(c: CaseResult, lim: SecurityLimits): string {
  if (c.metrics === null) return `<span class="muted">${esc(c.reason)}</span>`;
  const m = c.metrics;
  return m.binding
    .map((flag) => {
      const r = reading(flag, m, lim);
      return `<span class="bind">${flagBadge(flag)} <span class="val" data-flag-value="${esc(flag)}">${r.value}</span> <span class="lim">limit <span data-flag-limit="${esc(flag)}">${r.limit}</span></span></span>`;
    })
    .join(" ");
}

function filterChips(active: string | null): string {
  const chip = (label: string, key: string | null) => {
    const cls = key === active ? "chip filter active" : "chip filter";
    const attr = key === null ? "" : ` data-filter="${esc(key)}"`;
    return `<button class="${cls}"${key === null ? ' data-filter=""' : attr}>${esc(label)}</button>`;
  };
  return [chip("all", null), ...CASE_FLAGS.map((f) => chip(f, f))].join("");
}

function detailPanel(c: CaseResult, lim: SecurityLimits): string {
  if (c.metrics === null) {
    return `<aside class="detail" data-detail="${esc(c.id)}"><h3>${esc(c.id)}</h3><p class="muted">${esc(c.reason) || "no metrics"}</p></aside>`;
  }
  const m = c.metrics;
  const bound = new Set(m.binding);
  const row = (name: string, flag: string, value: string, limit: string) => {
    const cls = bound.has(flag) ? "bind-row bad" : "bind-row";
    return `<tr class="${cls}"><td>${esc(name)}</td><td data-detail-value="${esc(flag)}">${value}</td><td data-detail-limit="${esc(flag)}">${limit}</td></tr>`;
  };
  const volt = m.voltage_secure ? "in band" : "out of band";
  const rows = [
    row("max rate", "RoCoF+", fmtHzS(m.rocof_max), fmtHzS(lim.rocof_limit)),
    row("min rate", "RoCoF-", fmtHzS(m.rocof_min), fmtHzS(-lim.rocof_limit)),
    row("nadir", "Nadir", fmtHz(m.nadir), fmtHz(lim.nadir_limit)),
    row("zenith", "Zenith", fmtHz(m.zenith), fmtHz(lim.zenith_limit)),
    row("angle margin", "RotorAngle", fmtMargin(m.angle_margin), "0.000"),
    row("voltage", "Voltage", volt, `${lim.v_min_pu}..${lim.v_max_pu} pu`),
  ].join("");
  const sim =
    c.sim_s !== undefined
      ? `<p class="muted">simulated in ${fmtSeconds(c.sim_s)}</p>`
      : "";
  return `<aside class="detail" data-detail="${esc(c.id)}">
<h3>${esc(c.id)}</h3>
<p>${m.binding.map(flagBadge).join(" ") || '<span class="muted">no binding flags</span>'}</p>
<table class="metrics"><thead><tr><th>metric</th><th>value</th><th>limit</th></tr></thead><tbody>${rows}</tbody></table>
${sim}
<p class="muted">metric summary only; no frequency trace was dumped for this cycle</p>
</aside>`;
}

export function renderCases(
  ranked: RankedCases | null,
  filter: string | null,
  selectedId: string | null,
): string {
  if (ranked === null) {
    return `<section class="panel"><p class="muted">loading ranked cases...</p></section>`;
  }
  if (ranked.cases.length === 0) {
    return `<section class="panel allclear" data-allclear><h2>all clear</h2><p>no insecure contingencies in this cycle</p></section>`;
  }
  const shown = filter
    ? ranked.cases.filter((c) => c.metrics !== null && c.metrics.binding.includes(filter))
    : ranked.cases;
  const rows = shown
    .map((c) => {
      const sel = c.id === selectedId ? " selected" : "";
      const rank = ranked.cases.indexOf(c) + 1; // severity rank, not filter position
      return `<tr class="case-row${sel}" data-case="${esc(c.id)}"><td class="rank">${rank}</td><td class="cid">${esc(c.id)}</td><td>${bindingCell(c, ranked.limits)}</td></tr>`;
    })
    .join("");
  const body =
    shown.length === 0
      ? `<p class="muted" data-filter-empty>no cases bind ${esc(filter ?? "")}</p>`
      : `<table class="cases"><thead><tr><th>#</th><th>contingency</th><th>binding constraints</th></tr></thead><tbody>${rows}</tbody></table>`;
  const selected = selectedId
    ? ranked.cases.find((c) => c.id === selectedId)
    : undefined;
  const detail = selected ? detailPanel(selected, ranked.limits) : "";
  return `<section class="cases-view">
<div class="filters">${filterChips(filter)}</div>
<div class="cases-split">${body}${detail}</div>
</section>`;
}

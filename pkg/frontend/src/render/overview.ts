/**
 * Overview: the at-a-glance board. Latest cycle totals, system metrics,
 * and the policy compliance strip. Every number is a formatted field of
 * the latest CycleReport, nothing is derived here.
 */

import {
  esc,
  fmtCount,
  fmtMw,
  fmtPct,
  fmtSeconds,
  fmtTs,
} from "../format.js";
import type { CycleReport, PolicyRow } from "../types.js";
import { policyValue } from "./policy.js";

function tile(label: string, metric: string, value: string, unit: string): string {
  return `<div class="tile"><div class="tile-label">${label}</div><div class="tile-value" data-metric="${metric}">${value}</div><div class="tile-unit">${unit}</div></div>`;
}

function policyChip(row: PolicyRow): string {
  const cls =
    row.compliant === null ? "chip na" : row.compliant ? "chip ok" : "chip bad";
  // a breach names the limit it broke right on the chip
  const mark =
    row.compliant === null
      ? "?"
      : row.compliant
        ? "ok"
        : `breach (${policyValue(row.name, row.value)} vs ${policyValue(row.name, row.limit)})`;
  return `<span class="${cls}" data-policy-chip="${esc(row.name)}">${esc(row.name)}: ${mark}</span>`;
}

export function renderOverview(report: CycleReport | null): string {
  if (report === null) {
    return `<section class="panel"><p class="muted">waiting for the first cycle...</p></section>`;
  }
  const sys = report.system;
  const t = report.totals;
  const healthy = t.insecure === 0 && t.failed === 0 && !report.basecase_failure;
  const statusCls = healthy ? "status ok" : "status bad";
  const statusText = healthy
    ? "SECURE: no insecure contingencies"
    : `${t.insecure} insecure / ${t.failed} failed of ${t.cases} cases`;

  const tiles = [
    tile("kinetic energy", "inertia_mws", fmtMw(sys.inertia_mws), "MWs"),
    tile("demand", "demand_mw", fmtMw(sys.demand_mw), "MW"),
    tile("wind", "wind_mw", fmtMw(sys.wind_mw), "MW"),
    tile("SNSP", "snsp_pct", fmtPct(sys.snsp_pct), "%"),
    tile("large units on", "muon_count", fmtCount(sys.muon_count), ""),
    tile("net interchange", "net_interchange_mw", fmtMw(sys.net_interchange_mw), "MW"),
    tile("insecure cases", "insecure", fmtCount(t.insecure), `of ${fmtCount(t.cases)}`),
  ].join("");

  const regions = Object.entries(sys.muon_by_region)
    .map(([r, n]) => `${esc(r)}: ${fmtCount(n)}`)
    .join(", ");

  const chips = report.policy.rows.map(policyChip).join(" ");
  const polCls = report.policy.compliant ? "pol ok" : "pol bad";
  const polWord = report.policy.compliant ? "compliant" : "non-compliant";

  const wall =
    report.wall_time_s !== undefined
      ? `<span class="muted">screened in ${fmtSeconds(report.wall_time_s)}${report.over_budget ? " (OVER BUDGET)" : ""}</span>`
      : "";

  return `<section class="overview">
<div class="${statusCls}" data-status>${statusText}</div>
<div class="tiles">${tiles}</div>
<div class="muted">large units by region: ${regions}</div>
<div class="${polCls}">policy profile ${esc(report.policy.profile)}: <b data-policy-overall>${polWord}</b> ${chips}</div>
<div class="meta">snapshot ${fmtTs(report.snapshot_ts)} ${wall}</div>
</section>`;
}

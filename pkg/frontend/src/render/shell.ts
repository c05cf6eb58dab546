/**
 * Page chrome: nav tabs and the two health banners.
 *
 * Staleness is never silent. Losing the server keeps the last good data
 * on screen under an explicit banner with the time it was fetched, and a
 * stale flag from the server (snapshot older than two cadences) gets its
 * own banner even while the connection is fine.
 */

import { esc, fmtSeconds, fmtTs } from "../format.js";
import type { ConsoleState, ViewName } from "../state.js";
import { VIEWS } from "../state.js";

const VIEW_LABELS: Record<ViewName, string> = {
  overview: "Overview",
  cases: "Cases",
  policy: "Policy",
  analytics: "Analytics",
  whatif: "What-if",
};

export function renderNav(state: ConsoleState): string {
  const tabs = VIEWS.map((v) => {
    const cls = v === state.view ? "tab active" : "tab";
    return `<button class="${cls}" data-view="${v}">${VIEW_LABELS[v]}</button>`;
  }).join("");
  const ts = state.latest
    ? `<span class="nav-ts">cycle ${fmtTs(state.latest.snapshot_ts)}</span>`
    : `<span class="nav-ts">no cycle yet</span>`;
  return `<nav class="nav"><span class="brand">grid security console</span>${tabs}${ts}</nav>`;
}

export function renderBanners(state: ConsoleState): string {
  const out: string[] = [];
  if (state.connectionLost) {
    const since =
      state.lastGoodMs !== null
        ? `showing last good data from ${fmtTs(state.lastGoodMs / 1000)}`
        : "no data received yet";
    out.push(
      `<div class="banner lost" data-banner="connection">connection lost; ${since}</div>`,
    );
  }
  if (state.latest && state.latest.stale) {
    const age =
      state.latest.age_s !== undefined ? fmtSeconds(state.latest.age_s) : "unknown age";
    out.push(
      `<div class="banner stale" data-banner="stale">latest cycle is stale (${age} old); the feed may have stopped</div>`,
    );
  }
  if (state.latest && state.latest.basecase_failure) {
    out.push(
      `<div class="banner lost" data-banner="basecase">base case failed: ${esc(state.latest.basecase_failure)}</div>`,
    );
  }
  return out.join("");
}

export function renderShell(state: ConsoleState, body: string): string {
  return `${renderNav(state)}${renderBanners(state)}<main class="view">${body}</main>`;
}

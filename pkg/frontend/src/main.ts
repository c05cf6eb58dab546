/**
 * Browser wiring. Everything with logic worth testing lives in the other
 * modules; this file only owns the DOM, the poll timer, and event
 * delegation. Served statically; the API origin defaults to same-origin
 * and can be overridden with ?api=http://host:port.
 */

import { ApiClient } from "./api.js";
import { pollOnce, startPolling, TokenGate } from "./poll.js";
import { renderAnalytics } from "./render/analytics.js";
import { renderCases } from "./render/cases.js";
import { renderOverview } from "./render/overview.js";
import { renderPolicy } from "./render/policy.js";
import { renderShell } from "./render/shell.js";
import { renderWhatIf } from "./render/whatif.js";
import * as st from "./state.js";
import type { Modification } from "./types.js";

const apiBase = new URLSearchParams(location.search).get("api") ?? "";
const client = new ApiClient(apiBase);
const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

let state = st.initialState();
const pollGate = new TokenGate();
const rankedGate = new TokenGate();

function body(): string {
  switch (state.view) {
    case "overview":
      return renderOverview(state.latest);
    case "cases":
      return renderCases(state.ranked, state.caseFilter, state.selectedCase);
    case "policy":
      return renderPolicy(state.latest ? state.latest.policy : null);
    case "analytics":
      return renderAnalytics(
        state.summary,
        state.correlation,
        state.scatterCsv,
        state.corrVar,
        state.corrFlag,
      );
    case "whatif":
      return renderWhatIf(state.latest, state.draft, state.whatIf, state.whatIfError);
  }
}

function redraw(): void {
  root!.innerHTML = renderShell(state, body());
}

function set(next: st.ConsoleState): void {
  state = next;
  redraw();
}

async function pollLatest(): Promise<void> {
  await pollOnce(pollGate, () => client.latestCycle(), (res) => {
    if (res.ok) {
      const prevTs = state.latest?.snapshot_ts;
      set(st.pollSucceeded(state, res.value, Date.now()));
      // a new cycle invalidates the ranked list the cases view holds
      if (res.value.snapshot_ts !== prevTs) void loadRanked();
    } else {
      set(st.pollFailed(state));
    }
  });
}

async function loadRanked(): Promise<void> {
  const ts = state.selectedTs ?? state.latest?.snapshot_ts;
  if (ts === undefined) return;
  await pollOnce(rankedGate, () => client.rankedCases(ts), (res) => {
    if (res.ok) set(st.rankedLoaded(state, res.value));
  });
}

async function loadAnalytics(): Promise<void> {
  const [summary, corr, csv] = await Promise.all([
    client.summary(),
    client.correlation(state.corrVar, state.corrFlag),
    client.scatter(state.corrVar, "wind_mw", state.corrFlag),
  ]);
  let next = state;
  if (summary.ok) next = st.summaryLoaded(next, summary.value);
  if (corr.ok) next = st.correlationLoaded(next, corr.value);
  if (csv.ok) next = st.scatterLoaded(next, csv.value);
  set(next);
}

async function runWhatIf(): Promise<void> {
  const res = await client.whatIf(state.draft.map((m) => ({ ...m })));
  set(res.ok ? st.whatIfCommitted(state, res.value) : st.whatIfRejected(state, res.error));
}

function draftPatch(index: number, field: string, raw: string): void {
  const patch: Partial<Modification> = {};
  if (field === "element") {
    patch.element = raw;
  } else if (field === "online") {
    patch.online = raw === "" ? undefined : raw === "on";
  } else if (field === "p_set" || field === "p" || field === "q") {
    patch[field] = raw === "" ? undefined : Number(raw);
  }
  set(st.draftUpdate(state, index, patch));
}

document.addEventListener("click", (ev) => {
  const el = (ev.target as HTMLElement).closest("[data-view],[data-action],[data-filter],[data-case]");
  if (!el) return;
  const view = el.getAttribute("data-view");
  if (view) {
    set(st.showView(state, view as st.ViewName));
    if (view === "cases" && state.ranked === null) void loadRanked();
    if (view === "analytics" && state.summary === null) void loadAnalytics();
    return;
  }
  const filter = el.getAttribute("data-filter");
  if (filter !== null) {
    set(st.setCaseFilter(state, filter === "" ? null : filter));
    return;
  }
  const caseId = el.getAttribute("data-case");
  if (caseId !== null) {
    set(st.selectCase(state, state.selectedCase === caseId ? null : caseId));
    return;
  }
  switch (el.getAttribute("data-action")) {
    case "draft-add":
      set(st.draftAdd(state, { element: "" }));
      break;
    case "draft-remove":
      set(st.draftRemove(state, Number(el.getAttribute("data-index"))));
      break;
    case "draft-clear":
      set(st.draftClear(state));
      break;
    case "whatif-run":
      void runWhatIf();
      break;
    case "whatif-promote":
      set(st.promoteWhatIf(state));
      break;
    case "corr-run": {
      const v = root!.querySelector<HTMLSelectElement>('[data-control="corr-var"]');
      const f = root!.querySelector<HTMLSelectElement>('[data-control="corr-flag"]');
      if (v && f) {
        set(st.setCorrelationQuery(state, v.value, f.value));
        void loadAnalytics();
      }
      break;
    }
  }
});

document.addEventListener("change", (ev) => {
  const el = ev.target as HTMLInputElement | HTMLSelectElement;
  const field = el.getAttribute("data-field");
  const index = el.getAttribute("data-index");
  if (field && index !== null) draftPatch(Number(index), field, el.value);
});

redraw();
startPolling(() => void pollLatest(), state.pollMs);

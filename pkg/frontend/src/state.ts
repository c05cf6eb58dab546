/**
 * Console state and its transitions.
 *
 * All transitions are pure: they return a new state and never touch the
 * old one. Live data (`latest`, `ranked`, ...) only ever changes when a
 * committed API response arrives; what-if drafts and results live in
 * separate fields so exploring a redispatch can never bleed into the
 * numbers shown as live.
 */

import type { ApiError } from "./api.js";
import type {
  AnalyticsSummary,
  Correlation,
  CycleReport,
  Modification,
  RankedCases,
  WhatIfResult,
} from "./types.js";

export type ViewName = "overview" | "cases" | "policy" | "analytics" | "whatif";

export const VIEWS: ViewName[] = [
  "overview",
  "cases",
  "policy",
  "analytics",
  "whatif",
];

export const DEFAULT_POLL_MS = 5000;

export interface ConsoleState {
  view: ViewName;
  /** Cycle the operator pinned; null follows the latest. */
  selectedTs: number | null;
  pollMs: number;

  // committed live data
  latest: CycleReport | null;
  ranked: RankedCases | null;
  summary: AnalyticsSummary | null;
  correlation: Correlation | null;
  scatterCsv: string | null;

  // connection health
  lastGoodMs: number | null;
  connectionLost: boolean;

  // view controls
  caseFilter: string | null;
  selectedCase: string | null;
  corrVar: string;
  corrFlag: string;

  // what-if exploration, segregated from everything above
  draft: Modification[];
  whatIf: WhatIfResult | null;
  whatIfError: ApiError | null;
}

export function initialState(): ConsoleState {
  return {
    view: "overview",
    selectedTs: null,
    pollMs: DEFAULT_POLL_MS,
    latest: null,
    ranked: null,
    summary: null,
    correlation: null,
    scatterCsv: null,
    lastGoodMs: null,
    connectionLost: false,
    caseFilter: null,
    selectedCase: null,
    corrVar: "inertia_mws",
    corrFlag: "RoCoF-",
    draft: [],
    whatIf: null,
    whatIfError: null,
  };
}

export function showView(s: ConsoleState, view: ViewName): ConsoleState {
  return { ...s, view };
}

export function pollSucceeded(
  s: ConsoleState,
  report: CycleReport,
  nowMs: number,
): ConsoleState {
  return { ...s, latest: report, lastGoodMs: nowMs, connectionLost: false };
}

/** Keeps the last good report on screen; only the banner changes. */
export function pollFailed(s: ConsoleState): ConsoleState {
  return { ...s, connectionLost: true };
}

export function selectCycle(s: ConsoleState, ts: number | null): ConsoleState {
  return { ...s, selectedTs: ts };
}

export function rankedLoaded(s: ConsoleState, ranked: RankedCases): ConsoleState {
  return { ...s, ranked };
}

export function summaryLoaded(
  s: ConsoleState,
  summary: AnalyticsSummary,
): ConsoleState {
  return { ...s, summary };
}

export function correlationLoaded(
  s: ConsoleState,
  correlation: Correlation,
): ConsoleState {
  return { ...s, correlation };
}

export function scatterLoaded(s: ConsoleState, csv: string): ConsoleState {
  return { ...s, scatterCsv: csv };
}

export function setCaseFilter(
  s: ConsoleState,
  flag: string | null,
): ConsoleState {
  return { ...s, caseFilter: flag };
}

export function selectCase(s: ConsoleState, id: string | null): ConsoleState {
  return { ...s, selectedCase: id };
}

export function setCorrelationQuery(
  s: ConsoleState,
  corrVar: string,
  corrFlag: string,
): ConsoleState {
  return { ...s, corrVar, corrFlag, correlation: null, scatterCsv: null };
}

export function draftAdd(s: ConsoleState, mod: Modification): ConsoleState {
  return { ...s, draft: [...s.draft, { ...mod }] };
}

export function draftUpdate(
  s: ConsoleState,
  index: number,
  patch: Partial<Modification>,
): ConsoleState {
  const draft = s.draft.map((m, i) => (i === index ? { ...m, ...patch } : m));
  return { ...s, draft };
}

export function draftRemove(s: ConsoleState, index: number): ConsoleState {
  return { ...s, draft: s.draft.filter((_, i) => i !== index) };
}

export function draftClear(s: ConsoleState): ConsoleState {
  return { ...s, draft: [], whatIf: null, whatIfError: null };
}

export function whatIfCommitted(
  s: ConsoleState,
  result: WhatIfResult,
): ConsoleState {
  return { ...s, whatIf: result, whatIfError: null };
}

export function whatIfRejected(s: ConsoleState, error: ApiError): ConsoleState {
  return { ...s, whatIfError: error };
}

/**
 * Feedback loop: adopt the committed result's modifications as the next
 * draft so the operator can stack further changes on top. Deep-copies the
 * list so later edits cannot reach back into the displayed result.
 */
export function promoteWhatIf(s: ConsoleState): ConsoleState {
  if (s.whatIf === null) return s;
  return { ...s, draft: s.whatIf.modifications.map((m) => ({ ...m })) };
}

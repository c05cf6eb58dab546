/**
 * Wire types for the gridsentry HTTP API.
 *
 * These mirror the JSON documents the server emits verbatim; the console
 * never invents fields, so anything rendered traces back to one of these.
 */

export type CaseStatus = "secure" | "insecure" | "failed";

export interface CaseMetrics {
  rocof_max: number;
  rocof_min: number;
  nadir: number;
  zenith: number;
  angle_margin: number;
  voltage_secure: boolean;
  binding: string[];
}

export interface CaseResult {
  id: string;
  status: CaseStatus;
  metrics: CaseMetrics | null;
  reason: string;
  sim_s?: number;
}

export interface SystemMetrics {
  inertia_mws: number;
  demand_mw: number;
  wind_mw: number;
  snsp_pct: number;
  muon_count: number;
  net_interchange_mw: number;
  muon_by_region: Record<string, number>;
}

// value/limit/compliant are null for constraints the server declines to
// evaluate (the row still appears so the operator sees the gap)
export interface PolicyRow {
  name: string;
  value: number | null;
  limit: number | null;
  compliant: boolean | null;
  note: string;
}

export interface PolicyDoc {
  profile: string;
  compliant: boolean;
  rows: PolicyRow[];
}

export interface CycleTotals {
  cases: number;
  secure: number;
  insecure: number;
  failed: number;
}

export interface CycleReport {
  snapshot_ts: number;
  system: SystemMetrics;
  policy: PolicyDoc;
  totals: CycleTotals;
  cases: CaseResult[];
  budget_s: number;
  basecase_failure: string;
  workers?: number;
  wall_time_s?: number;
  over_budget?: boolean;
  /** Only on /cycles/latest. */
  age_s?: number;
  stale?: boolean;
}

export interface SecurityLimits {
  rocof_limit: number;
  nadir_limit: number;
  zenith_limit: number;
  rocof_window: number;
  blanking: number;
  angle_threshold: number;
  v_min_pu: number;
  v_max_pu: number;
  thermal_pct: number;
}

export interface RankedCases {
  snapshot_ts: number;
  limits: SecurityLimits;
  cases: CaseResult[];
}

export interface CaseList {
  snapshot_ts: number;
  cases: CaseResult[];
}

export interface SummaryRow {
  constraint: string;
  count: number;
  pct_of_all: number;
  pct_of_insecure: number;
}

export interface AnalyticsSummary {
  from_ts: number;
  to_ts: number;
  n_cycles: number;
  n_cycle_cases: number;
  n_insecure: number;
  insecure_pct: number;
  rows: SummaryRow[];
}

export interface Correlation {
  variable: string;
  unit: string;
  flag: string;
  n_cycles: number;
  n_flagged: number;
  r: number;
  p_value: number;
  mean_flagged: number;
  mean_clear: number;
}

export interface Modification {
  element: string;
  p_set?: number;
  p?: number;
  q?: number;
  online?: boolean;
}

export interface WhatIfResult {
  ephemeral: boolean;
  base_snapshot_ts: number;
  modifications: Modification[];
  report: CycleReport;
}

/** Binding flags a case can carry, in display order. */
export const CASE_FLAGS = [
  "RoCoF+",
  "RoCoF-",
  "Nadir",
  "Zenith",
  "RotorAngle",
  "Voltage",
] as const;

/** Flags the analytics endpoints accept. */
export const ANALYTICS_FLAGS = [
  "RotorAngle",
  "Voltage",
  "RoCoF",
  "Zenith",
  "Nadir",
  "RoCoF+",
  "RoCoF-",
] as const;

/** System variables the analytics endpoints accept. */
export const SYSTEM_VARS = [
  "inertia_mws",
  "demand_mw",
  "wind_mw",
  "snsp_pct",
  "muon_count",
  "net_interchange_mw",
] as const;

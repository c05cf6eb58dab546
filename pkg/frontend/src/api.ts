/**
 * Thin client over the service API.
 *
 * Every method resolves to an ApiResult rather than throwing: the console
 * treats "server said no" and "network gone" as renderable states, not
 * exceptions. The fetch implementation is injected so contract tests can
 * replay recorded responses without a server.
 */

import type {
  AnalyticsSummary,
  CaseList,
  Correlation,
  CycleReport,
  Modification,
  PolicyDoc,
  RankedCases,
  WhatIfResult,
} from "./types.js";

export type ApiError =
  | { kind: "http"; status: number; message: string; retryAfterS?: number }
  | { kind: "network"; message: string };

export type ApiResult<T> =
  | { ok: true; value: T }
  | { ok: false; error: ApiError };

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

const ok = <T>(value: T): ApiResult<T> => ({ ok: true, value });
const fail = <T>(error: ApiError): ApiResult<T> => ({ ok: false, error });

async function errorFrom(res: Response): Promise<ApiError> {
  // server errors are {"error": msg}; tolerate anything else
  let message = `HTTP ${res.status}`;
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") message = body.error;
  } catch {
    /* non-JSON error body; keep the status line */
  }
  const err: ApiError = { kind: "http", status: res.status, message };
  const retry = res.headers.get("Retry-After");
  if (retry !== null && retry !== "") {
    const s = Number(retry);
    if (Number.isFinite(s)) err.retryAfterS = s;
  }
  return err;
}

export class ApiClient {
  constructor(
    private base: string,
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private url(path: string, params?: Record<string, string>): string {
    let u = this.base + path;
    if (params) {
      const q = new URLSearchParams(params).toString();
      if (q) u += "?" + q;
    }
    return u;
  }

  private async getJson<T>(
    path: string,
    params?: Record<string, string>,
  ): Promise<ApiResult<T>> {
    let res: Response;
    try {
      res = await this.fetchFn(this.url(path, params));
    } catch (exc) {
      return fail({ kind: "network", message: String(exc) });
    }
    if (!res.ok) return fail(await errorFrom(res));
    try {
      return ok((await res.json()) as T);
    } catch (exc) {
      return fail({ kind: "network", message: `bad JSON: ${exc}` });
    }
  }

  latestCycle(): Promise<ApiResult<CycleReport>> {
    return this.getJson("/cycles/latest");
  }

  cycle(ts: number): Promise<ApiResult<CycleReport>> {
    return this.getJson(`/cycles/${ts}`);
  }

  cases(ts: number, status?: string): Promise<ApiResult<CaseList>> {
    return this.getJson(
      `/cycles/${ts}/cases`,
      status ? { status } : undefined,
    );
  }

  rankedCases(ts: number): Promise<ApiResult<RankedCases>> {
    return this.getJson(`/cycles/${ts}/ranked`);
  }

  latestPolicy(): Promise<ApiResult<PolicyDoc>> {
    return this.getJson("/policy/latest");
  }

  summary(fromTs?: number, toTs?: number): Promise<ApiResult<AnalyticsSummary>> {
    const params: Record<string, string> = {};
    if (fromTs !== undefined) params.from = String(fromTs);
    if (toTs !== undefined) params.to = String(toTs);
    return this.getJson("/analytics/summary", params);
  }

  correlation(variable: string, flag: string): Promise<ApiResult<Correlation>> {
    return this.getJson("/analytics/correlations", { var: variable, flag });
  }

  /** Scatter is CSV, returned as raw text for the parser. */
  async scatter(x: string, y: string, flag: string): Promise<ApiResult<string>> {
    let res: Response;
    try {
      res = await this.fetchFn(this.url("/analytics/scatter", { x, y, flag }));
    } catch (exc) {
      return fail({ kind: "network", message: String(exc) });
    }
    if (!res.ok) return fail(await errorFrom(res));
    return ok(await res.text());
  }

  async whatIf(
    modifications: Modification[],
    contingencies?: string[],
  ): Promise<ApiResult<WhatIfResult>> {
    const body: Record<string, unknown> = { modifications };
    if (contingencies) body.contingencies = contingencies;
    let res: Response;
    try {
      res = await this.fetchFn(this.url("/whatif"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (exc) {
      return fail({ kind: "network", message: String(exc) });
    }
    if (!res.ok) return fail(await errorFrom(res));
    try {
      return ok((await res.json()) as WhatIfResult);
    } catch (exc) {
      return fail({ kind: "network", message: `bad JSON: ${exc}` });
    }
  }
}

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import type { CycleReport, RankedCases, WhatIfResult } from "../src/types.js";
import { fixture, fixtureText } from "./helpers.js";

function recorder(handler: (url: string, init?: RequestInit) => Response) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fn = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return handler(url, init);
  };
  return { fn, calls };
}

const jsonRes = (body: unknown, status = 200, headers: Record<string, string> = {}) =>
  new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json", ...headers },
  });

describe("url construction", () => {
  it("hits the documented routes", async () => {
    const { fn, calls } = recorder(() => jsonRes({}));
    const c = new ApiClient("http://host:8910", fn);
    await c.latestCycle();
    await c.cycle(1760001500);
    await c.cases(1760001500, "insecure");
    await c.rankedCases(1760001500);
    await c.latestPolicy();
    await c.summary(100, 200);
    await c.correlation("inertia_mws", "RoCoF-");
    expect(calls.map((x) => x.url)).toEqual([
      "http://host:8910/cycles/latest",
      "http://host:8910/cycles/1760001500",
      "http://host:8910/cycles/1760001500/cases?status=insecure",
      "http://host:8910/cycles/1760001500/ranked",
      "http://host:8910/policy/latest",
      "http://host:8910/analytics/summary?from=100&to=200",
      "http://host:8910/analytics/correlations?var=inertia_mws&flag=RoCoF-",
    ]);
  });

  it("query-encodes the + in RoCoF+", async () => {
    const { fn, calls } = recorder(() => jsonRes({}));
    await new ApiClient("", fn).correlation("wind_mw", "RoCoF+");
    expect(calls[0].url).toBe("/analytics/correlations?var=wind_mw&flag=RoCoF%2B");
  });
});

describe("response handling", () => {
  it("round-trips a recorded cycle untouched", async () => {
    const doc = fixture<CycleReport>("cycle_insecure.json");
    const { fn } = recorder(() => jsonRes(doc));
    const res = await new ApiClient("", fn).latestCycle();
    expect(res.ok).toBe(true);
    if (res.ok) expect(res.value).toEqual(doc);
  });

  it("round-trips the ranked list with its limits", async () => {
    const doc = fixture<RankedCases>("cases_ranked.json");
    const { fn } = recorder(() => jsonRes(doc));
    const res = await new ApiClient("", fn).rankedCases(doc.snapshot_ts);
    expect(res.ok).toBe(true);
    if (res.ok) {
      expect(res.value.limits.rocof_limit).toBe(doc.limits.rocof_limit);
      expect(res.value.cases).toEqual(doc.cases);
    }
  });

  it("returns scatter text verbatim", async () => {
    const csv = fixtureText("analytics_scatter.csv");
    const { fn, calls } = recorder(() => new Response(csv, { status: 200 }));
    const res = await new ApiClient("", fn).scatter("inertia_mws", "wind_mw", "RoCoF-");
    expect(calls[0].url).toBe(
      "/analytics/scatter?x=inertia_mws&y=wind_mw&flag=RoCoF-",
    );
    expect(res.ok).toBe(true);
    if (res.ok) expect(res.value).toBe(csv);
  });

  it("surfaces server error bodies as http errors", async () => {
    const body = fixture<{ error: string }>("whatif_error.json");
    const { fn } = recorder(() => jsonRes(body, 400));
    const res = await new ApiClient("", fn).whatIf([{ element: "G99" }]);
    expect(res.ok).toBe(false);
    if (!res.ok) {
      expect(res.error).toEqual({
        kind: "http",
        status: 400,
        message: body.error,
      });
    }
  });

  it("carries Retry-After through on 503", async () => {
    const { fn } = recorder(
      () => new Response(null, { status: 503, headers: { "Retry-After": "1" } }),
    );
    const res = await new ApiClient("", fn).whatIf([]);
    expect(res.ok).toBe(false);
    if (!res.ok && res.error.kind === "http") {
      expect(res.error.status).toBe(503);
      expect(res.error.retryAfterS).toBe(1);
    } else {
      throw new Error("expected http error");
    }
  });

  it("maps a dead socket to a network error, not a throw", async () => {
    const fn = async () => {
      throw new TypeError("fetch failed");
    };
    const res = await new ApiClient("", fn).latestCycle();
    expect(res.ok).toBe(false);
    if (!res.ok) expect(res.error.kind).toBe("network");
  });
});

describe("what-if posting", () => {
  it("POSTs the modification list as JSON", async () => {
    const doc = fixture<WhatIfResult>("whatif_muon.json");
    const { fn, calls } = recorder(() => jsonRes(doc));
    const mods = doc.modifications;
    const res = await new ApiClient("http://h", fn).whatIf(mods);
    expect(calls[0].url).toBe("http://h/whatif");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ modifications: mods });
    expect(res.ok).toBe(true);
    if (res.ok) {
      expect(res.value.ephemeral).toBe(true);
      expect(res.value.report.totals).toEqual(doc.report.totals);
    }
  });

  it("passes an explicit contingency subset through", async () => {
    const { fn, calls } = recorder(() => jsonRes(fixture("whatif_noop.json")));
    await new ApiClient("", fn).whatIf([], ["hvdc_trip:HVDC1"]);
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      modifications: [],
      contingencies: ["hvdc_trip:HVDC1"],
    });
  });
});

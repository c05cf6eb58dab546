"""Record console test fixtures from a live gridsentry server.

Boots the real engine in-process, runs deterministic cycles, and saves
the HTTP bodies the console consumes. Every fixture the tests rely on
is asserted here first, so a drifting engine breaks this script before
it breaks the console tests.

Run from the repo root:

    python3 frontend/scripts/record_fixtures.py
"""

import copy
import json
import pathlib
import sys
import threading
import urllib.error
import urllib.request

ROOT = pathlib.Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / "tests"))

import netgen  # noqa: E402

from gridsentry.config import EngineConfig  # noqa: E402
from gridsentry.criteria import SecurityLimits  # noqa: E402
from gridsentry.dynsim import SimConfig  # noqa: E402
from gridsentry.netmodel import snapshot_from_document  # noqa: E402
from gridsentry.server import make_server  # noqa: E402

OUT = ROOT / "frontend" / "fixtures"
TS0 = 1_760_000_000
FROZEN = 1e9  # governor time constant that parks the response


def doubled_circuits(doc: dict) -> dict:
    """Add a parallel circuit per branch so line trips never island."""
    doc = copy.deepcopy(doc)
    extra = []
    for br in doc["branches"]:
        twin = dict(br)
        twin["id"] = br["id"] + "b"
        extra.append(twin)
    doc["branches"].extend(extra)
    return doc


def clean_doc(ts: int, h: float, demand: float) -> dict:
    doc = doubled_circuits(netgen.ten_machine(trip_mw=300.0,
                                              demand_mw=demand))
    doc["timestamp"] = ts
    for m in doc["machines"]:
        m["h"] = h
    return doc


def troubled_doc(ts: int, h: float, demand: float, wind: float,
                 hvdc1: float, hvdc2: float) -> dict:
    """Low-inertia operating point with frozen governors.

    Tuned so hvdc_trip:HVDC1 hits a windowed rate of exactly
    -hvdc1*50/(2*inertia) Hz/s: constant-slope frequency makes the
    window read the true slope. Circuits stay single on purpose: a
    line trip then strands one machine whose island overspeeds, which
    populates the triage list with RoCoF+/Zenith rows.
    """
    doc = netgen.ten_machine(trip_mw=hvdc1, demand_mw=demand,
                             wind_mw=wind)
    doc["timestamp"] = ts
    sync = demand - wind - hvdc1 - hvdc2
    for i, m in enumerate(doc["machines"]):
        m["h"] = h
        m["t_gov"] = FROZEN
        m["p_set"] = sync / 10
        m["is_large_unit"] = i < 6  # MUON 6 against the floor of 7
    doc["ibr_units"].append(netgen.ibr("HVDC2", "B0", "hvdc", p=hvdc2))
    # an available large unit for the commitment what-if
    doc["machines"].append(netgen.machine(
        "G11", "B1", p_set=0.0, s_rated=575.0, h=4.0, p_max=520.0,
        online=False, is_large_unit=True, t_gov=FROZEN))
    return doc


def redispatch_doc(ts: int) -> dict:
    """Export-heavy base whose one insecure case clears on redispatch."""
    demand, wind, imp, exp = 4600.0, 800.0, 700.0, -900.0
    doc = doubled_circuits(netgen.ten_machine(trip_mw=imp,
                                              demand_mw=demand))
    doc["timestamp"] = ts
    sync = demand - wind - imp - exp
    for m in doc["machines"]:
        m["t_gov"] = FROZEN
        m["p_set"] = sync / 10
    doc["ibr_units"].append(netgen.ibr("W1", "B0", "wind", p=wind))
    doc["ibr_units"].append(netgen.ibr("HVDC2", "B0", "hvdc", p=exp))
    doc["machines"].append(netgen.machine(
        "G11", "B1", p_set=500.0, s_rated=575.0, h=4.0, p_max=520.0,
        online=False, is_large_unit=True, t_gov=FROZEN))
    return doc


def get_json(base: str, path: str) -> dict:
    with urllib.request.urlopen(base + path, timeout=30) as resp:
        return json.loads(resp.read())


def get_text(base: str, path: str) -> str:
    with urllib.request.urlopen(base + path, timeout=30) as resp:
        return resp.read().decode()


def post_json(base: str, path: str, body: dict) -> tuple[int, dict]:
    req = urllib.request.Request(
        base + path, data=json.dumps(body).encode(),
        headers={"Content-Type": "application/json"}, method="POST")
    try:
        with urllib.request.urlopen(req, timeout=120) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def save(name: str, payload) -> None:
    path = OUT / name
    if isinstance(payload, str):
        path.write_text(payload)
    else:
        path.write_text(json.dumps(payload, indent=1) + "\n")
    print(f"  wrote {path.relative_to(ROOT)}")


def case_by_id(report: dict, cid: str) -> dict:
    for c in report["cases"]:
        if c["id"] == cid:
            return c
    raise AssertionError(f"no case {cid}")


def policy_row(doc: dict, name: str) -> dict:
    for r in doc["rows"]:
        if r["name"] == name:
            return r
    raise AssertionError(f"no policy row {name}")


def serve(cfg: EngineConfig):
    httpd, engine = make_server(cfg)
    threading.Thread(target=httpd.serve_forever, daemon=True).start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    return httpd, engine, base


def record_archive_fixtures() -> None:
    cfg = EngineConfig(
        listen="127.0.0.1:0",
        sim=SimConfig(dt=0.005, t_end=2.0, event_t=0.25),
        limits=SecurityLimits(),
    )
    httpd, engine, base = serve(cfg)
    try:
        # three comfortable cycles, then three strained ones; the last
        # (and newest) is the triage fixture the cases view renders
        for i, (h, demand) in enumerate(
                [(4.0, 4600.0), (4.2, 4500.0), (4.4, 4400.0)]):
            engine.run_cycle(snapshot_from_document(
                clean_doc(TS0 + 300 * i, h, demand)))
        secure = get_json(base, "/cycles/latest")
        assert secure["totals"]["insecure"] == 0, secure["totals"]
        assert secure["policy"]["compliant"] is True
        assert secure["stale"] is False
        save("cycle_secure.json", secure)
        save("policy_secure.json", get_json(base, "/policy/latest"))

        troubled = [
            (3.80, 4650.0, 1050.0),
            (3.85, 4700.0, 1100.0),
            (22500.0 / 5750.0, 4600.0, 1000.0),  # the headline cycle
        ]
        for i, (h, demand, wind) in enumerate(troubled):
            engine.run_cycle(snapshot_from_document(troubled_doc(
                TS0 + 300 * (3 + i), h, demand, wind,
                hvdc1=855.0, hvdc2=765.0)))

        insecure = get_json(base, "/cycles/latest")
        sysm = insecure["system"]
        assert round(sysm["inertia_mws"], 6) == 22500.0, sysm
        assert sysm["muon_count"] == 6
        hv1 = case_by_id(insecure, "hvdc_trip:HVDC1")
        # the triage row the contract tests pin: -0.95 against the
        # symmetric 0.9 limit
        assert round(hv1["metrics"]["rocof_min"], 2) == -0.95, hv1
        assert "RoCoF-" in hv1["metrics"]["binding"]
        assert insecure["totals"]["insecure"] == 13, insecure["totals"]
        assert insecure["policy"]["compliant"] is False
        save("cycle_insecure.json", insecure)

        pol = get_json(base, "/policy/latest")
        assert policy_row(pol, "SNSP")["compliant"] is True
        assert policy_row(pol, "Inertia Floor")["compliant"] is False
        assert policy_row(pol, "MUON")["compliant"] is False
        save("policy_insecure.json", pol)

        ts = insecure["snapshot_ts"]
        ranked = get_json(base, f"/cycles/{ts}/ranked")
        assert len(ranked["cases"]) == 13
        assert all(c["status"] == "insecure" for c in ranked["cases"])
        flags = {f for c in ranked["cases"]
                 for f in c["metrics"]["binding"]}
        assert {"RoCoF-", "RoCoF+", "Nadir", "Zenith"} <= flags, flags
        save("cases_ranked.json", ranked)

        summary = get_json(base, "/analytics/summary")
        assert summary["n_cycles"] == 6
        assert summary["n_insecure"] > 0
        save("analytics_summary.json", summary)

        corr = get_json(
            base, "/analytics/correlations?var=inertia_mws&flag=RoCoF-")
        assert corr["r"] < 0, corr  # strained cycles sit at low inertia
        save("analytics_correlations.json", corr)

        scatter = get_text(
            base, "/analytics/scatter?x=inertia_mws&y=wind_mw&flag=RoCoF-")
        assert scatter.count("\n") >= 7, scatter  # 2 comments + 6 cycles
        save("analytics_scatter.csv", scatter)

        code, noop = post_json(base, "/whatif", {"modifications": []})
        assert code == 200 and noop["ephemeral"] is True
        assert noop["report"]["totals"] == {
            k: insecure["totals"][k] for k in noop["report"]["totals"]}
        save("whatif_noop.json", noop)

        code, muon = post_json(base, "/whatif", {
            "modifications": [{"element": "G11", "online": True}]})
        assert code == 200
        row = policy_row(muon["report"]["policy"], "MUON")
        assert row["compliant"] is True, row  # 7 large units now on
        save("whatif_muon.json", muon)

        code, err = post_json(base, "/whatif", {
            "modifications": [{"element": "G99", "online": False}]})
        assert code == 400 and "error" in err, (code, err)
        save("whatif_error.json", err)
    finally:
        httpd.shutdown()


def record_redispatch_fixtures() -> None:
    # shorter horizon: the export-loss overspeed must stay inside the
    # zenith band so the one binding flag is the rate itself
    cfg = EngineConfig(
        listen="127.0.0.1:0",
        sim=SimConfig(dt=0.005, t_end=1.0, event_t=0.25),
        limits=SecurityLimits(),
    )
    httpd, engine, base = serve(cfg)
    try:
        engine.run_cycle(snapshot_from_document(
            redispatch_doc(TS0 + 3600)))
        basecycle = get_json(base, "/cycles/latest")
        assert basecycle["totals"]["insecure"] == 1, basecycle["totals"]
        hv2 = case_by_id(basecycle, "hvdc_trip:HVDC2")
        assert hv2["metrics"]["binding"] == ["RoCoF+"], hv2
        save("whatif_base.json", basecycle)

        # curtail wind, commit a synchronous unit in its place
        code, better = post_json(base, "/whatif", {"modifications": [
            {"element": "W1", "p": 300.0},
            {"element": "G11", "online": True, "p_set": 500.0},
        ]})
        assert code == 200
        totals = better["report"]["totals"]
        assert totals["insecure"] == 0, totals
        save("whatif_redispatch.json", better)
    finally:
        httpd.shutdown()


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    record_archive_fixtures()
    record_redispatch_fixtures()
    print("fixtures ok")

"""Service tests against a real socket: cycles, queries, what-if, inbox."""

import dataclasses
import json
import threading
import urllib.error
import urllib.request

import pytest

import netgen
from gridsentry.analytics import CaseArchive
from gridsentry.config import config_from_document
from gridsentry.errors import BindError
from gridsentry.netmodel import load_snapshot
from gridsentry.screener import rank_insecure
from gridsentry.server import Engine, InboxWatcher, make_server
from netgen import parse


def _get(base, path):
    try:
        with urllib.request.urlopen(base + path, timeout=10) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read() or b"{}")


def _get_raw(base, path):
    with urllib.request.urlopen(base + path, timeout=10) as r:
        return r.status, r.headers.get("Content-Type"), r.read().decode()


def _post(base, path, doc):
    req = urllib.request.Request(
        base + path, data=json.dumps(doc).encode(),
        headers={"Content-Type": "application/json"}, method="POST")
    try:
        with urllib.request.urlopen(req, timeout=30) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read() or b"{}")


def _config(tmp_path):
    return config_from_document({
        "engine": {
            "archive_dir": str(tmp_path / "archive"),
            "listen": "127.0.0.1:0",
            "budget_s": 60.0,
        },
        "simulation": {"t_end": 2.0},
    })


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("svc")
    httpd, engine = make_server(_config(tmp))
    t = threading.Thread(target=httpd.serve_forever, daemon=True)
    t.start()
    port = httpd.server_address[1]
    base = f"http://127.0.0.1:{port}"
    engine.run_cycle(parse(netgen.ten_machine()))
    yield base, engine
    httpd.shutdown()
    httpd.server_close()


def test_healthz(service):
    base, _ = service
    code, doc = _get(base, "/healthz")
    assert code == 200 and doc["ok"] is True


def test_latest_cycle_document(service):
    base, engine = service
    code, doc = _get(base, "/cycles/latest")
    assert code == 200
    assert doc["snapshot_ts"] == engine.snapshot.timestamp
    assert doc["totals"]["cases"] == 21
    assert doc["stale"] is False
    assert doc["basecase_failure"] == ""


def test_cycle_by_timestamp_and_unknown(service):
    base, engine = service
    ts = engine.snapshot.timestamp
    code, doc = _get(base, f"/cycles/{ts}")
    assert code == 200 and doc["snapshot_ts"] == ts
    code, doc = _get(base, "/cycles/12345")
    assert code == 404
    code, doc = _get(base, "/cycles/banana")
    assert code == 400


def test_case_filtering(service):
    base, engine = service
    ts = engine.snapshot.timestamp
    code, doc = _get(base, f"/cycles/{ts}/cases?status=insecure")
    assert code == 200
    assert doc["cases"]
    assert all(c["status"] == "insecure" for c in doc["cases"])
    code, all_doc = _get(base, f"/cycles/{ts}/cases")
    assert len(all_doc["cases"]) == 21
    code, _ = _get(base, f"/cycles/{ts}/cases?status=wobbly")
    assert code == 400


def test_ranked_cases_match_library_order(service):
    base, engine = service
    ts = engine.snapshot.timestamp
    code, doc = _get(base, f"/cycles/{ts}/ranked")
    assert code == 200
    rep = engine.archive.get(ts)
    expect = [c.contingency_id
              for c in rank_insecure(rep.cases, engine.cfg.limits)]
    assert [c["id"] for c in doc["cases"]] == expect
    # triage clients render value-vs-limit from this field alone
    assert doc["limits"] == dataclasses.asdict(engine.cfg.limits)


def test_policy_latest(service):
    base, _ = service
    code, doc = _get(base, "/policy/latest")
    assert code == 200
    names = [r["name"] for r in doc["rows"]]
    assert names == ["SNSP", "RoCoF", "Inertia Floor", "MUON",
                     "System Strength"]


def test_analytics_summary_and_window(service):
    base, engine = service
    code, doc = _get(base, "/analytics/summary")
    assert code == 200
    assert doc["n_cycles"] == 1
    assert doc["n_cycle_cases"] == 21
    code, _ = _get(base, "/analytics/summary?from=99999999999")
    assert code == 404


def test_analytics_correlations_need_variation(service):
    base, _ = service
    code, doc = _get(base, "/analytics/correlations?var=inertia_mws")
    assert code == 422  # single cycle cannot correlate
    code, doc = _get(base, "/analytics/correlations?var=nope")
    assert code == 400
    code, doc = _get(base, "/analytics/correlations")
    assert code == 400


def test_analytics_scatter_csv(service):
    base, _ = service
    code, ctype, body = _get_raw(
        base, "/analytics/scatter?x=inertia_mws&y=wind_mw")
    assert code == 200
    assert ctype == "text/csv"
    assert body.splitlines()[1] == "ts,x,y,insecure"


def test_unknown_route(service):
    base, _ = service
    assert _get(base, "/nope")[0] == 404


# --- what-if -----------------------------------------------------------------

def test_whatif_is_ephemeral_with_provenance(service):
    base, engine = service
    before = len(engine.archive)
    # decommit one unit and lean on the interconnector instead: less
    # stored energy and a bigger single loss
    mods = [{"element": "G10", "online": False},
            {"element": "HVDC1", "p": 1090.0}]
    code, doc = _post(base, "/whatif", {
        "modifications": mods,
        "contingencies": ["hvdc_trip:HVDC1"],
    })
    assert code == 200
    assert doc["ephemeral"] is True
    assert doc["base_snapshot_ts"] == engine.snapshot.timestamp
    assert doc["modifications"] == mods
    assert doc["report"]["totals"]["cases"] == 1
    m = doc["report"]["cases"][0]["metrics"]
    baseline = engine.archive.latest().case("hvdc_trip:HVDC1").metrics
    assert m["rocof_min"] < baseline.rocof_min
    assert len(engine.archive) == before


def test_whatif_rejects_unknown_element(service):
    base, _ = service
    code, doc = _post(base, "/whatif", {
        "modifications": [{"element": "G99", "online": False}]})
    assert code == 400


def test_whatif_rejects_unknown_contingency(service):
    base, _ = service
    code, doc = _post(base, "/whatif",
                      {"contingencies": ["gen_trip:NOPE"]})
    assert code == 400


def test_whatif_bad_json(service):
    base, _ = service
    req = urllib.request.Request(
        f"{base}/whatif", data=b"{nope", method="POST")
    with pytest.raises(urllib.error.HTTPError) as exc:
        urllib.request.urlopen(req, timeout=10)
    assert exc.value.code == 400


def test_whatif_concurrency_gate(service):
    base, engine = service
    assert engine.try_whatif_slot()
    assert engine.try_whatif_slot()
    try:
        code, _ = _post(base, "/whatif", {"contingencies": []})
        assert code == 503
    finally:
        engine.release_whatif_slot()
        engine.release_whatif_slot()


def test_whatif_before_any_snapshot(tmp_path):
    httpd, engine = make_server(_config(tmp_path))
    t = threading.Thread(target=httpd.serve_forever, daemon=True)
    t.start()
    try:
        base = f"http://127.0.0.1:{httpd.server_address[1]}"
        code, doc = _post(base, "/whatif", {})
        assert code == 409
        assert _get(base, "/cycles/latest")[0] == 404
    finally:
        httpd.shutdown()
        httpd.server_close()


# --- engine level ------------------------------------------------------------

def test_insecure_base_is_persisted_as_failed_cycle(tmp_path):
    cfg = _config(tmp_path)
    engine = Engine(cfg)
    doc = netgen.document(
        buses=[netgen.bus("B1", kind="slack"), netgen.bus("B2")],
        branches=[netgen.branch("L1", "B1", "B2", x=0.25)],
        machines=[netgen.machine("G1", "B1", s_rated=1000.0, h=4.0,
                                 p_set=160.0, p_max=1000.0)],
        loads=[netgen.load("D1", "B2", p=160.0)],
    )
    rep = engine.run_cycle(parse(doc))
    assert rep.basecase_failure
    assert rep.cases == ()
    assert engine.archive.latest() == rep
    # the record survives a reload
    assert CaseArchive(cfg.archive_dir).latest().basecase_failure \
        == rep.basecase_failure


def test_bind_conflict_raises(tmp_path):
    httpd, _ = make_server(_config(tmp_path))
    try:
        port = httpd.server_address[1]
        with pytest.raises(BindError):
            make_server(_config(tmp_path), listen=f"127.0.0.1:{port}")
    finally:
        httpd.server_close()


def test_listen_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("GRIDSENTRY_LISTEN", "127.0.0.1:0")
    cfg = config_from_document({
        "engine": {"listen": "10.255.255.1:1"},  # unroutable if used
        "simulation": {"t_end": 2.0},
    })
    httpd, _ = make_server(cfg)
    try:
        assert httpd.server_address[0] == "127.0.0.1"
    finally:
        httpd.server_close()


# --- inbox -------------------------------------------------------------------

def test_inbox_newest_snapshot_wins(tmp_path):
    cfg = _config(tmp_path)
    engine = Engine(cfg)
    inbox = tmp_path / "inbox"
    watcher = InboxWatcher(engine, inbox, poll_s=3600.0)

    old = dict(netgen.ten_machine())
    old["timestamp"] = 1_700_000_100
    new = dict(netgen.ten_machine())
    new["timestamp"] = 1_700_000_200
    (inbox / "a-old.json").write_text(json.dumps(old))
    (inbox / "b-new.json").write_text(json.dumps(new))
    (inbox / "junk.json").write_text("{not json")

    watcher.sweep()

    assert engine.archive.timestamps() == [1_700_000_200]
    assert sorted(p.name for p in inbox.glob("*.json")) == []
    consumed = sorted(p.name for p in (inbox / "consumed").glob("*"))
    assert consumed == ["a-old.json", "b-new.json", "junk.json"]
    assert any("junk.json" in e for e in engine.inbox_errors)


def test_inbox_stale_snapshot_is_logged_not_archived(tmp_path):
    cfg = _config(tmp_path)
    engine = Engine(cfg)
    engine.run_cycle(parse(netgen.ten_machine()))  # ts 1_700_000_000
    inbox = tmp_path / "inbox"
    watcher = InboxWatcher(engine, inbox, poll_s=3600.0)

    stale = dict(netgen.ten_machine())
    stale["timestamp"] = 1_600_000_000
    (inbox / "stale.json").write_text(json.dumps(stale))
    watcher.sweep()

    assert engine.archive.timestamps() == [1_700_000_000]
    assert any("1600000000" in e or "not after" in e
               for e in engine.inbox_errors)


def test_empty_inbox_sweep_is_a_noop(tmp_path):
    engine = Engine(_config(tmp_path))
    watcher = InboxWatcher(engine, tmp_path / "inbox", poll_s=3600.0)
    watcher.sweep()
    assert len(engine.archive) == 0

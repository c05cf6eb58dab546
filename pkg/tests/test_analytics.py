"""Archive persistence and the offline analytics built on it."""

import io
import json
import math

import pytest
from scipy import stats

from gridsentry.analytics import (
    CaseArchive,
    correlate,
    scatter_export,
    summarize,
)
from gridsentry.criteria import SecurityMetrics
from gridsentry.errors import (
    DegenerateError,
    EmptyWindowError,
    ValidationError,
)
from gridsentry.netmodel import SystemMetrics
from gridsentry.policy import PolicyReport
from gridsentry.screener import CaseResult, CycleReport


def _metrics(flags=()):
    binding = frozenset(flags)
    return SecurityMetrics(
        rocof_max=1.2 if "RoCoF+" in binding else 0.1,
        rocof_min=-1.2 if "RoCoF-" in binding else -0.1,
        nadir=48.5 if "Nadir" in binding else 49.8,
        zenith=51.0 if "Zenith" in binding else 50.1,
        angle_margin=-0.2 if "RotorAngle" in binding else 0.8,
        voltage_secure="Voltage" not in binding,
        binding=binding,
    )


def _cycle(ts, case_flags, inertia=23000.0, demand=4600.0, wind=500.0):
    cases = tuple(
        CaseResult(
            contingency_id=f"gen_trip:G{i:02d}",
            status="insecure" if flags else "secure",
            metrics=_metrics(flags),
        )
        for i, flags in enumerate(case_flags)
    )
    snsp = 100.0 * wind / demand
    return CycleReport(
        snapshot_ts=ts,
        system=SystemMetrics(
            inertia_mws=inertia, demand_mw=demand, wind_mw=wind,
            snsp_pct=snsp, muon_count=7, net_interchange_mw=0.0,
            muon_by_region={"IE": 5, "NI": 2},
        ),
        policy=PolicyReport(profile="2023", rows=()),
        cases=cases,
        wall_time_s=0.5,
        budget_s=60.0,
        workers=1,
    )


# --- archive -----------------------------------------------------------------

def test_archive_round_trips_through_directory(tmp_path):
    arch = CaseArchive(tmp_path)
    arch.add(_cycle(100, [set(), {"Nadir"}]))
    arch.add(_cycle(200, [set(), set()]))
    reloaded = CaseArchive(tmp_path)
    assert len(reloaded) == 2
    assert reloaded.timestamps() == [100, 200]
    assert reloaded.get(100) == arch.get(100)
    assert reloaded.latest() == arch.latest()


def test_archive_rejects_stale_timestamps(tmp_path):
    arch = CaseArchive(tmp_path)
    arch.add(_cycle(100, [set()]))
    with pytest.raises(ValidationError):
        arch.add(_cycle(100, [set()]))
    with pytest.raises(ValidationError):
        arch.add(_cycle(50, [set()]))


def test_memory_only_archive_works():
    arch = CaseArchive()
    arch.add(_cycle(100, [{"Voltage"}]))
    assert arch.latest().snapshot_ts == 100


def test_interrupted_write_leaves_no_torn_cycle(tmp_path, monkeypatch):
    arch = CaseArchive(tmp_path)
    arch.add(_cycle(100, [set()]))

    import os as _os
    real_replace = _os.replace

    def boom(src, dst):
        raise OSError("disk pulled")

    monkeypatch.setattr("gridsentry.analytics.os.replace", boom)
    with pytest.raises(OSError):
        arch.add(_cycle(200, [set()]))
    monkeypatch.setattr("gridsentry.analytics.os.replace", real_replace)

    assert arch.timestamps() == [100]  # memory state not advanced
    reloaded = CaseArchive(tmp_path)
    assert reloaded.timestamps() == [100]
    for p in tmp_path.glob("cycle-*.json"):
        json.loads(p.read_text())  # every persisted doc parses


def test_window_selection(tmp_path):
    arch = CaseArchive()
    for ts in (100, 200, 300, 400):
        arch.add(_cycle(ts, [set()]))
    assert [c.snapshot_ts for c in arch.cycles(200, 300)] == [200, 300]
    assert [c.snapshot_ts for c in arch.cycles(from_ts=301)] == [400]
    assert arch.cycles(to_ts=99) == []


# --- summary -----------------------------------------------------------------

def test_summary_counts_each_constraint():
    arch = CaseArchive()
    arch.add(_cycle(1, [{"RotorAngle"}, {"Voltage"}, set(), set()]))
    arch.add(_cycle(2, [{"RoCoF+"}, {"Nadir"}, set(), set()]))
    arch.add(_cycle(3, [{"Zenith"}, set(), set(), set()]))
    s = summarize(arch)
    assert s.n_cycles == 3
    assert s.n_cycle_cases == 12
    assert s.n_insecure == 5
    by = {r.constraint: r for r in s.rows}
    assert by["RotorAngle"].count == 1
    assert by["Voltage"].count == 1
    assert by["RoCoF"].count == 1
    assert by["Zenith"].count == 1
    assert by["Nadir"].count == 1
    assert s.insecure_pct == pytest.approx(100 * 5 / 12)
    assert [r.constraint for r in s.rows] == [
        "RotorAngle", "Voltage", "RoCoF", "Zenith", "Nadir"]


def test_signed_rocof_flags_merge_into_one_bucket():
    arch = CaseArchive()
    arch.add(_cycle(1, [{"RoCoF+", "RoCoF-"}, {"RoCoF-"}, set()]))
    s = summarize(arch)
    by = {r.constraint: r for r in s.rows}
    assert by["RoCoF"].count == 2  # double-flagged case counted once
    assert s.n_insecure == 2


def test_multi_constraint_case_is_one_unique_insecure():
    arch = CaseArchive()
    arch.add(_cycle(1, [{"Nadir", "Voltage"}, set()]))
    s = summarize(arch)
    by = {r.constraint: r for r in s.rows}
    assert by["Nadir"].count == 1 and by["Voltage"].count == 1
    assert s.n_insecure == 1


def test_disjoint_flags_share_out_to_100_percent():
    arch = CaseArchive()
    flags = [{"RotorAngle"}] * 3 + [{"Voltage"}] * 5 + [{"RoCoF-"}] * 4 \
        + [{"Zenith"}] * 2 + [{"Nadir"}] * 1 + [set()] * 10
    arch.add(_cycle(1, flags))
    s = summarize(arch)
    assert sum(r.pct_of_insecure for r in s.rows) == pytest.approx(
        100.0, abs=0.05)


def test_summary_over_empty_window_raises():
    arch = CaseArchive()
    arch.add(_cycle(100, [set()]))
    with pytest.raises(EmptyWindowError):
        summarize(arch, from_ts=500)


def test_failed_cases_are_not_assessed_units():
    import dataclasses

    arch = CaseArchive()
    rep = _cycle(1, [set(), set()])
    failed = CaseResult("line_trip:LX", "failed", None, reason="x")
    arch.add(dataclasses.replace(rep, cases=rep.cases + (failed,)))
    assert summarize(arch).n_cycle_cases == 2


# --- correlations ------------------------------------------------------------

def _seeded_archive():
    # low-inertia cycles carry the RoCoF flag, high-inertia ones are
    # clean; the association is negative by construction
    arch = CaseArchive()
    for i in range(40):
        low = i % 2 == 0
        inertia = 18000.0 + (0.0 if low else 9000.0) + 10.0 * i
        flags = [{"RoCoF-"}] if low else [set()]
        arch.add(_cycle(1000 + i, flags + [set()], inertia=inertia,
                        wind=800.0 if low else 200.0))
    return arch


def test_low_inertia_correlates_with_rocof_insecurity():
    corr = correlate(_seeded_archive(), "inertia_mws", flag="RoCoF")
    assert corr.r < -0.8
    assert corr.p_value < 1e-6
    assert corr.mean_flagged < corr.mean_clear
    assert corr.n_flagged == 20
    assert corr.n_cycles == 40


def test_correlation_matches_reference_computation():
    arch = _seeded_archive()
    corr = correlate(arch, "wind_mw", flag=None)
    x = [c.system.wind_mw for c in arch.cycles()]
    y = [1 if any(k.metrics.binding for k in c.cases if k.metrics)
         else 0 for c in arch.cycles()]
    r_ref, p_ref = stats.pointbiserialr(y, x)
    assert corr.r == pytest.approx(float(r_ref), rel=1e-12)
    assert corr.p_value == pytest.approx(float(p_ref), rel=1e-12)
    assert corr.mean_flagged == pytest.approx(800.0)
    assert corr.mean_clear == pytest.approx(200.0)


def test_all_secure_window_is_degenerate():
    arch = CaseArchive()
    for ts in (1, 2, 3):
        arch.add(_cycle(ts, [set()], inertia=20000.0 + ts))
    with pytest.raises(DegenerateError):
        correlate(arch, "inertia_mws")


def test_constant_variable_is_degenerate():
    arch = CaseArchive()
    arch.add(_cycle(1, [{"Nadir"}], inertia=20000.0))
    arch.add(_cycle(2, [set()], inertia=20000.0))
    with pytest.raises(DegenerateError):
        correlate(arch, "inertia_mws")


def test_unknown_variable_and_flag_rejected():
    arch = _seeded_archive()
    with pytest.raises(ValidationError):
        correlate(arch, "frequency_of_birds")
    with pytest.raises(ValidationError):
        correlate(arch, "inertia_mws", flag="Sparkles")


# --- scatter export ----------------------------------------------------------

def test_scatter_rows_and_header():
    arch = _seeded_archive()
    buf = io.StringIO()
    n = scatter_export(arch, "inertia_mws", "wind_mw", buf, flag="RoCoF")
    lines = buf.getvalue().splitlines()
    assert n == 40
    assert lines[0].startswith("# units: inertia_mws [MWs], wind_mw [MW]")
    assert lines[1] == "ts,x,y,insecure"
    assert len(lines) == 42
    first = lines[2].split(",")
    assert first[0] == "1000"
    assert first[3] == "1"


def test_scatter_rejects_identical_axes():
    with pytest.raises(ValidationError):
        scatter_export(_seeded_archive(), "wind_mw", "wind_mw",
                       io.StringIO())


def test_scatter_empty_window():
    with pytest.raises(EmptyWindowError):
        scatter_export(_seeded_archive(), "wind_mw", "demand_mw",
                       io.StringIO(), from_ts=10**9)

"""Cycle screening: run every contingency in the set against the
snapshot, classify each case, and assemble the cycle report.

Case work is embarrassingly parallel. Workers receive the snapshot and
solved base flow once through the pool initializer; each case is then a
pure function of its contingency, so the merged report is identical
whatever the worker count.
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .contingency import Contingency, apply_contingency, build_contingency_set
from .criteria import (
    SecurityLimits,
    SecurityMetrics,
    assess_case,
    voltage_assessment,
)
from .dynsim import SimConfig, simulate, write_trace_csv
from .errors import BasecaseInsecureError, GridSentryError
from .netmodel import Snapshot, SystemMetrics, system_metrics
from .policy import (
    PolicyLimits,
    PolicyReport,
    check,
    load_profile,
    report_from_document,
)
from .powerflow import solve

STATUSES = ("secure", "insecure", "failed")


@dataclasses.dataclass(frozen=True)
class CaseResult:
    contingency_id: str
    status: str
    metrics: SecurityMetrics | None
    reason: str = ""
    sim_s: float = 0.0

    def to_document(self, normalize: bool = False) -> dict:
        doc = {
            "id": self.contingency_id,
            "status": self.status,
            "metrics": _metrics_doc(self.metrics),
            "reason": self.reason,
        }
        if not normalize:
            doc["sim_s"] = self.sim_s
        return doc


def _metrics_doc(m: SecurityMetrics | None) -> dict | None:
    if m is None:
        return None
    return {
        "rocof_max": m.rocof_max,
        "rocof_min": m.rocof_min,
        "nadir": m.nadir,
        "zenith": m.zenith,
        "angle_margin": m.angle_margin,
        "voltage_secure": m.voltage_secure,
        "binding": sorted(m.binding),
    }


def _metrics_from_doc(doc: dict | None) -> SecurityMetrics | None:
    if doc is None:
        return None
    return SecurityMetrics(
        rocof_max=doc["rocof_max"],
        rocof_min=doc["rocof_min"],
        nadir=doc["nadir"],
        zenith=doc["zenith"],
        angle_margin=doc["angle_margin"],
        voltage_secure=doc["voltage_secure"],
        binding=frozenset(doc["binding"]),
    )


@dataclasses.dataclass(frozen=True)
class CycleReport:
    snapshot_ts: int
    system: SystemMetrics
    policy: PolicyReport
    cases: tuple[CaseResult, ...]
    wall_time_s: float
    budget_s: float
    workers: int
    basecase_failure: str = ""  # nonempty when screening was refused

    @property
    def totals(self) -> dict:
        t = {"cases": len(self.cases), "secure": 0, "insecure": 0,
             "failed": 0}
        for c in self.cases:
            t[c.status] += 1
        return t

    @property
    def over_budget(self) -> bool:
        return self.wall_time_s > self.budget_s

    def case(self, contingency_id: str) -> CaseResult:
        for c in self.cases:
            if c.contingency_id == contingency_id:
                return c
        raise KeyError(contingency_id)

    def to_document(self, normalize: bool = False) -> dict:
        doc = {
            "snapshot_ts": self.snapshot_ts,
            "system": dataclasses.asdict(self.system),
            "policy": self.policy.to_document(),
            "totals": self.totals,
            "cases": [c.to_document(normalize) for c in self.cases],
            "budget_s": self.budget_s,
            "basecase_failure": self.basecase_failure,
        }
        if not normalize:
            # execution metadata, excluded when comparing results
            doc["workers"] = self.workers
            doc["wall_time_s"] = self.wall_time_s
            doc["over_budget"] = self.over_budget
        return doc

    def to_json(self, normalize: bool = False) -> str:
        return json.dumps(self.to_document(normalize), indent=1)


def report_from_doc(doc: dict) -> CycleReport:
    cases = tuple(
        CaseResult(
            contingency_id=c["id"],
            status=c["status"],
            metrics=_metrics_from_doc(c["metrics"]),
            reason=c.get("reason", ""),
            sim_s=c.get("sim_s", 0.0),
        )
        for c in doc["cases"]
    )
    sys_doc = dict(doc["system"])
    return CycleReport(
        snapshot_ts=doc["snapshot_ts"],
        system=SystemMetrics(**sys_doc),
        policy=report_from_document(doc["policy"]),
        cases=cases,
        wall_time_s=doc.get("wall_time_s", 0.0),
        budget_s=doc["budget_s"],
        workers=doc.get("workers", 1),
        basecase_failure=doc.get("basecase_failure", ""),
    )


# --- per-case work -----------------------------------------------------------
# module globals so forked workers inherit one copy instead of pickling
# the snapshot into every task

_CTX: dict = {}


def _init_worker(snap, limits, cfg, base_pf, trace_dir=None) -> None:
    _CTX["snap"] = snap
    _CTX["limits"] = limits
    _CTX["cfg"] = cfg
    _CTX["pf"] = base_pf
    _CTX["trace_dir"] = trace_dir


def _trace_name(contingency_id: str) -> str:
    safe = contingency_id.replace(":", "_").replace(",", "-")
    return safe + ".csv"


def _case_worker(cont: Contingency) -> CaseResult:
    t0 = time.perf_counter()
    snap = _CTX["snap"]
    limits = _CTX["limits"]
    try:
        res = simulate(snap, cont, _CTX["cfg"], pf=_CTX["pf"])
        if _CTX.get("trace_dir"):
            path = Path(_CTX["trace_dir"]) / _trace_name(cont.id)
            with open(path, "w") as fh:
                write_trace_csv(res, fh)
        post = solve(apply_contingency(snap, cont), promote_slack=True)
        if not post.converged:
            return CaseResult(
                cont.id, "failed", None,
                "post-contingency power flow did not converge",
                time.perf_counter() - t0,
            )
        m = assess_case(res, post, limits)
        status = "insecure" if m.insecure else "secure"
        return CaseResult(cont.id, status, m, "", time.perf_counter() - t0)
    except GridSentryError as exc:
        return CaseResult(cont.id, "failed", None,
                          f"{type(exc).__name__}: {exc}",
                          time.perf_counter() - t0)


def screen(
    snap: Snapshot,
    contingencies=None,
    limits: SecurityLimits | None = None,
    policy_limits: PolicyLimits | None = None,
    sim_config: SimConfig | None = None,
    budget_s: float = 60.0,
    workers: int = 1,
    trace_dir: str | None = None,
) -> CycleReport:
    """One full assessment cycle.

    Refuses to screen an already-insecure base case: contingency
    results on top of a broken operating point would be noise.
    """
    t_start = time.perf_counter()
    limits = limits or SecurityLimits()
    limits.validate()
    policy_limits = policy_limits or load_profile("2023")
    cfg = sim_config or SimConfig()

    base_pf = solve(snap)
    if not base_pf.converged:
        raise BasecaseInsecureError("base case power flow did not converge")
    v_ok, findings = voltage_assessment(base_pf, limits)
    if not v_ok:
        raise BasecaseInsecureError(
            "base case violates voltage/thermal limits: "
            + "; ".join(findings)
        )

    if contingencies is None:
        contingencies = build_contingency_set(snap)
    conts = list(contingencies)
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)

    if workers <= 1:
        _init_worker(snap, limits, cfg, base_pf, trace_dir)
        results = [_case_worker(c) for c in conts]
    else:
        chunk = max(1, len(conts) // (workers * 4))
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(snap, limits, cfg, base_pf, trace_dir),
        ) as pool:
            results = list(pool.map(_case_worker, conts, chunksize=chunk))

    results.sort(key=lambda r: r.contingency_id)
    metrics_list = [r.metrics for r in results if r.metrics is not None]
    policy = check(system_metrics(snap), policy_limits, metrics_list)

    return CycleReport(
        snapshot_ts=snap.timestamp,
        system=system_metrics(snap),
        policy=policy,
        cases=tuple(results),
        wall_time_s=time.perf_counter() - t_start,
        budget_s=budget_s,
        workers=workers,
    )


def severity(m: SecurityMetrics, limits: SecurityLimits,
             freq_scale_hz: float = 1.0,
             rocof_scale_hz_s: float = 0.9) -> float:
    """Normalized worst exceedance across the binding constraints."""
    worst = 0.0
    if "Nadir" in m.binding:
        worst = max(worst, (limits.nadir_limit - m.nadir) / freq_scale_hz)
    if "Zenith" in m.binding:
        worst = max(worst, (m.zenith - limits.zenith_limit) / freq_scale_hz)
    if "RoCoF+" in m.binding:
        worst = max(
            worst, (m.rocof_max - limits.rocof_limit) / rocof_scale_hz_s)
    if "RoCoF-" in m.binding:
        worst = max(
            worst, (-m.rocof_min - limits.rocof_limit) / rocof_scale_hz_s)
    if "RotorAngle" in m.binding and m.angle_margin is not None:
        worst = max(worst, -m.angle_margin)
    return worst


def rank_insecure(cases, limits: SecurityLimits,
                  freq_scale_hz: float = 1.0,
                  rocof_scale_hz_s: float = 0.9) -> list:
    """Insecure cases ordered most severe first, ties broken by id."""
    flagged = [c for c in cases if c.status == "insecure"]
    flagged.sort(key=lambda c: (
        -severity(c.metrics, limits, freq_scale_hz, rocof_scale_hz_s),
        c.contingency_id,
    ))
    return flagged

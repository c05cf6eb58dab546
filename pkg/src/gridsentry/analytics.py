"""Cycle archive and offline analytics.

The archive is append-only: one JSON document per completed cycle,
written atomically (tmp file then rename) so a crash mid-write never
leaves a torn document, plus an index of timestamps. Analytics run over
a timestamp window and come in two units: per cycle-case for the
constraint breakdown, per cycle for correlations against operating
variables.
"""

from __future__ import annotations

import dataclasses
import json
import os
from pathlib import Path

from scipy import stats

from .errors import DegenerateError, EmptyWindowError, ValidationError
from .screener import CycleReport, report_from_doc

CONSTRAINT_ORDER = ("RotorAngle", "Voltage", "RoCoF", "Zenith", "Nadir")

SYSTEM_VARS = {
    "inertia_mws": "MWs",
    "demand_mw": "MW",
    "wind_mw": "MW",
    "snsp_pct": "%",
    "muon_count": "count",
    "net_interchange_mw": "MW",
}


class CaseArchive:
    """Ordered store of cycle reports, optionally directory-backed."""

    def __init__(self, directory: str | Path | None = None):
        self._dir = Path(directory) if directory is not None else None
        self._cycles: list[CycleReport] = []
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
            self._load()

    def _load(self) -> None:
        index = self._dir / "index.json"
        if index.exists():
            ts_list = json.loads(index.read_text())["timestamps"]
            paths = [self._dir / f"cycle-{ts}.json" for ts in ts_list]
        else:
            paths = sorted(
                self._dir.glob("cycle-*.json"),
                key=lambda p: int(p.stem.split("-", 1)[1]),
            )
        for p in paths:
            self._cycles.append(report_from_doc(json.loads(p.read_text())))
        for a, b in zip(self._cycles, self._cycles[1:]):
            if b.snapshot_ts <= a.snapshot_ts:
                raise ValidationError(
                    f"archive at {self._dir} is not strictly ordered"
                )

    def __len__(self) -> int:
        return len(self._cycles)

    def timestamps(self) -> list[int]:
        return [c.snapshot_ts for c in self._cycles]

    def add(self, report: CycleReport) -> None:
        if self._cycles and report.snapshot_ts <= self._cycles[-1].snapshot_ts:
            raise ValidationError(
                f"cycle {report.snapshot_ts} not after "
                f"{self._cycles[-1].snapshot_ts}; archive is append-only"
            )
        if self._dir is not None:
            self._write(f"cycle-{report.snapshot_ts}.json",
                        report.to_json())
            ts = self.timestamps() + [report.snapshot_ts]
            self._write("index.json", json.dumps({"timestamps": ts}))
        self._cycles.append(report)

    def _write(self, name: str, payload: str) -> None:
        # rename is atomic on the same filesystem; a crash leaves only
        # a .tmp file the loader ignores
        tmp = self._dir / (name + ".tmp")
        tmp.write_text(payload)
        os.replace(tmp, self._dir / name)

    def latest(self) -> CycleReport | None:
        return self._cycles[-1] if self._cycles else None

    def get(self, ts: int) -> CycleReport:
        for c in self._cycles:
            if c.snapshot_ts == ts:
                return c
        raise KeyError(ts)

    def cycles(self, from_ts: int | None = None,
               to_ts: int | None = None) -> list[CycleReport]:
        out = []
        for c in self._cycles:
            if from_ts is not None and c.snapshot_ts < from_ts:
                continue
            if to_ts is not None and c.snapshot_ts > to_ts:
                continue
            out.append(c)
        return out


# --- constraint breakdown ----------------------------------------------------

@dataclasses.dataclass(frozen=True)
class ConstraintShare:
    constraint: str
    count: int
    pct_of_all: float
    pct_of_insecure: float


@dataclasses.dataclass(frozen=True)
class Summary:
    from_ts: int
    to_ts: int
    n_cycles: int
    n_cycle_cases: int
    n_insecure: int  # unique insecure cycle-cases
    insecure_pct: float
    rows: tuple[ConstraintShare, ...]

    def to_document(self) -> dict:
        return {
            "from_ts": self.from_ts,
            "to_ts": self.to_ts,
            "n_cycles": self.n_cycles,
            "n_cycle_cases": self.n_cycle_cases,
            "n_insecure": self.n_insecure,
            "insecure_pct": self.insecure_pct,
            "rows": [dataclasses.asdict(r) for r in self.rows],
        }


def _case_flags(m) -> set[str]:
    # fold the signed RoCoF flags into one reporting bucket
    out = set()
    for f in m.binding:
        out.add("RoCoF" if f.startswith("RoCoF") else f)
    return out


def summarize(archive: CaseArchive, from_ts: int | None = None,
              to_ts: int | None = None) -> Summary:
    """Constraint breakdown over all cycle-cases in the window."""
    cycles = archive.cycles(from_ts, to_ts)
    total = 0
    unique = 0
    counts = {name: 0 for name in CONSTRAINT_ORDER}
    for cyc in cycles:
        for case in cyc.cases:
            if case.metrics is None:
                continue  # failed cases carry no verdict
            total += 1
            flags = _case_flags(case.metrics)
            if flags:
                unique += 1
            for name in flags:
                counts[name] += 1
    if total == 0:
        raise EmptyWindowError("no assessed cycle-cases in the window")
    rows = tuple(
        ConstraintShare(
            constraint=name,
            count=counts[name],
            pct_of_all=100.0 * counts[name] / total,
            pct_of_insecure=(100.0 * counts[name] / unique) if unique else 0.0,
        )
        for name in CONSTRAINT_ORDER
    )
    return Summary(
        from_ts=cycles[0].snapshot_ts,
        to_ts=cycles[-1].snapshot_ts,
        n_cycles=len(cycles),
        n_cycle_cases=total,
        n_insecure=unique,
        insecure_pct=100.0 * unique / total,
        rows=rows,
    )


# --- per-cycle correlations --------------------------------------------------

@dataclasses.dataclass(frozen=True)
class Correlation:
    variable: str
    unit: str
    flag: str | None  # None means any insecure case
    n_cycles: int
    n_flagged: int
    r: float
    p_value: float
    mean_flagged: float
    mean_clear: float

    def to_document(self) -> dict:
        return dataclasses.asdict(self)


# correlations may target one signed rate flag, not just the merged bucket
FILTER_FLAGS = CONSTRAINT_ORDER + ("RoCoF+", "RoCoF-")


def _cycle_flagged(cyc: CycleReport, flag: str | None) -> bool:
    for case in cyc.cases:
        if case.metrics is None:
            continue
        if flag is None:
            if case.metrics.binding:
                return True
        elif (flag in case.metrics.binding
                or flag in _case_flags(case.metrics)):
            return True
    return False


def correlate(archive: CaseArchive, variable: str,
              flag: str | None = None, from_ts: int | None = None,
              to_ts: int | None = None) -> Correlation:
    """Point-biserial correlation between an operating variable and the
    presence of (flagged) insecurity, one observation per cycle."""
    if variable not in SYSTEM_VARS:
        raise ValidationError(
            f"unknown system variable {variable!r}; have "
            f"{sorted(SYSTEM_VARS)}"
        )
    if flag is not None and flag not in FILTER_FLAGS:
        raise ValidationError(
            f"unknown constraint {flag!r}; have {list(FILTER_FLAGS)}"
        )
    cycles = archive.cycles(from_ts, to_ts)
    if not cycles:
        raise EmptyWindowError("no cycles in the window")
    x = [float(getattr(c.system, variable)) for c in cycles]
    y = [1 if _cycle_flagged(c, flag) else 0 for c in cycles]
    n1 = sum(y)
    if n1 == 0 or n1 == len(y):
        raise DegenerateError(
            "flag state identical across all cycles; correlation undefined"
        )
    if min(x) == max(x):
        raise DegenerateError(f"{variable} constant over the window")
    r, p = stats.pointbiserialr(y, x)
    flagged = [v for v, b in zip(x, y) if b]
    clear = [v for v, b in zip(x, y) if not b]
    return Correlation(
        variable=variable,
        unit=SYSTEM_VARS[variable],
        flag=flag,
        n_cycles=len(cycles),
        n_flagged=n1,
        r=float(r),
        p_value=float(p),
        mean_flagged=sum(flagged) / len(flagged),
        mean_clear=sum(clear) / len(clear),
    )


def scatter_export(archive: CaseArchive, x: str, y: str, fileobj,
                   flag: str | None = None, from_ts: int | None = None,
                   to_ts: int | None = None) -> int:
    """Write per-cycle scatter rows as CSV; returns the row count."""
    if x == y:
        raise ValidationError("x and y must be different variables")
    for v in (x, y):
        if v not in SYSTEM_VARS:
            raise ValidationError(f"unknown system variable {v!r}")
    if flag is not None and flag not in FILTER_FLAGS:
        raise ValidationError(f"unknown constraint {flag!r}")
    cycles = archive.cycles(from_ts, to_ts)
    if not cycles:
        raise EmptyWindowError("no cycles in the window")
    fileobj.write(f"# units: {x} [{SYSTEM_VARS[x]}], "
                  f"{y} [{SYSTEM_VARS[y]}]\n")
    fileobj.write("ts,x,y,insecure\n")
    for c in cycles:
        fileobj.write(
            f"{c.snapshot_ts},{getattr(c.system, x):.6g},"
            f"{getattr(c.system, y):.6g},"
            f"{1 if _cycle_flagged(c, flag) else 0}\n"
        )
    return len(cycles)

"""Operating-policy compliance: SNSP ceiling, RoCoF operational limit,
inertia floor, and minimum number of online units.

The RoCoF row is special: policy is stated against realized system
behaviour, so it can only be judged once a screening cycle has produced
per-case metrics. Without them the row reports not-evaluated rather
than guessing. System strength is carried as a reserved row; no agreed
evaluation method exists for it here, and inventing one would be worse
than saying so.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownProfileError, ValidationError
from .netmodel import SystemMetrics

RESERVED_NOTE = "reserved: no evaluation method defined"


@dataclass(frozen=True)
class PolicyLimits:
    profile: str = "2023"
    snsp_max_pct: float = 75.0
    rocof_limit_hz_s: float = 1.0
    inertia_floor_mws: float = 23000.0
    muon_min: int = 7
    muon_min_by_region: dict[str, int] | None = None

    def validate(self) -> None:
        if not 0 < self.snsp_max_pct <= 100:
            raise ValidationError("snsp_max_pct outside (0, 100]")
        if self.rocof_limit_hz_s <= 0:
            raise ValidationError("rocof_limit_hz_s must be positive")
        if self.inertia_floor_mws < 0:
            raise ValidationError("inertia_floor_mws must be >= 0")
        if self.muon_min < 0:
            raise ValidationError("muon_min must be >= 0")
        for region, k in (self.muon_min_by_region or {}).items():
            if k < 0:
                raise ValidationError(f"muon minimum for {region} is < 0")


_PROFILES = {
    "2023": PolicyLimits(profile="2023", snsp_max_pct=75.0,
                         rocof_limit_hz_s=1.0, inertia_floor_mws=23000.0,
                         muon_min=7),
    "2030": PolicyLimits(profile="2030", snsp_max_pct=95.0,
                         rocof_limit_hz_s=1.0, inertia_floor_mws=20000.0,
                         muon_min=3),
}


def load_profile(name: str) -> PolicyLimits:
    try:
        return _PROFILES[name]
    except KeyError:
        raise UnknownProfileError(
            f"no policy profile {name!r}; have {sorted(_PROFILES)}"
        ) from None


@dataclass(frozen=True)
class ConstraintRow:
    name: str
    value: float | None
    limit: float | None
    compliant: bool | None  # None means not evaluated
    note: str = ""

    def to_document(self) -> dict:
        return {"name": self.name, "value": self.value,
                "limit": self.limit, "compliant": self.compliant,
                "note": self.note}


@dataclass(frozen=True)
class PolicyReport:
    profile: str
    rows: tuple[ConstraintRow, ...]

    @property
    def compliant(self) -> bool:
        return all(r.compliant is not False for r in self.rows)

    def row(self, name: str) -> ConstraintRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_document(self) -> dict:
        return {
            "profile": self.profile,
            "compliant": self.compliant,
            "rows": [r.to_document() for r in self.rows],
        }


def report_from_document(doc: dict) -> PolicyReport:
    rows = tuple(
        ConstraintRow(name=r["name"], value=r["value"], limit=r["limit"],
                      compliant=r["compliant"], note=r.get("note", ""))
        for r in doc["rows"]
    )
    return PolicyReport(profile=doc["profile"], rows=rows)


def check(metrics: SystemMetrics, limits: PolicyLimits,
          case_metrics=None) -> PolicyReport:
    """Judge the operating point against the policy table.

    `case_metrics`, when given, is an iterable of per-case security
    metrics from a completed screening cycle; the RoCoF row then holds
    the worst windowed magnitude across all cases.
    """
    limits.validate()
    rows = [
        ConstraintRow("SNSP", metrics.snsp_pct, limits.snsp_max_pct,
                      metrics.snsp_pct <= limits.snsp_max_pct),
        _rocof_row(case_metrics, limits.rocof_limit_hz_s),
        ConstraintRow("Inertia Floor", metrics.inertia_mws,
                      limits.inertia_floor_mws,
                      metrics.inertia_mws >= limits.inertia_floor_mws),
    ]
    rows += _muon_rows(metrics, limits)
    rows.append(ConstraintRow("System Strength", None, None, None,
                              note=RESERVED_NOTE))
    return PolicyReport(profile=limits.profile, rows=tuple(rows))


def _rocof_row(case_metrics, limit: float) -> ConstraintRow:
    cases = list(case_metrics) if case_metrics is not None else []
    if not cases:
        return ConstraintRow("RoCoF", None, limit, None,
                             note="not evaluated: no screened cases")
    worst = max(max(m.rocof_max, -m.rocof_min) for m in cases)
    return ConstraintRow("RoCoF", worst, limit, worst <= limit,
                         note=f"worst of {len(cases)} cases")


def _muon_rows(metrics: SystemMetrics,
               limits: PolicyLimits) -> list[ConstraintRow]:
    if limits.muon_min_by_region is None:
        return [ConstraintRow("MUON", metrics.muon_count, limits.muon_min,
                              metrics.muon_count >= limits.muon_min)]
    rows = []
    for region in sorted(limits.muon_min_by_region):
        need = limits.muon_min_by_region[region]
        have = metrics.muon_by_region.get(region, 0)
        rows.append(ConstraintRow(f"MUON ({region})", have, need,
                                  have >= need))
    return rows

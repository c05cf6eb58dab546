"""Network data model, snapshot ingestion and system-wide metrics.

A snapshot is the engine's unit of input: the full electrical state of the
grid at one timestamp, as delivered by an EMS/state-estimator feed. All
element types are frozen dataclasses; once a snapshot passes validation it
is immutable and safe to share across worker processes.

Snapshot documents are UTF-8 JSON with top-level keys ``timestamp``,
``base_mva``, ``nominal_hz``, ``buses``, ``branches``, ``machines``,
``ibr_units`` and ``loads``. Field names match the dataclass fields.
"""

from __future__ import annotations

import json
import os
from dataclasses import MISSING, dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Union

from .errors import (
    DegenerateError,
    LimitError,
    ParseError,
    UnknownElementError,
    ValidationError,
)

BUS_KINDS = ("slack", "PV", "PQ")
IBR_KINDS = ("wind", "solar", "hvdc")
REGIONS = ("IE", "NI")


@dataclass(frozen=True)
class Bus:
    id: str
    nominal_kv: float
    kind: str  # slack | PV | PQ
    v_mag: float = 1.0
    v_ang: float = 0.0  # radians
    region: str = "IE"


@dataclass(frozen=True)
class Branch:
    id: str
    from_bus: str
    to_bus: str
    r: float  # pu on system base
    x: float
    b_shunt: float = 0.0  # total line charging, pu
    mva_rating: float = 9999.0
    in_service: bool = True


@dataclass(frozen=True)
class SyncMachine:
    """Synchronous unit. ``h`` is the inertia constant in seconds on the
    machine MVA base, so the stored kinetic energy is ``h * s_rated`` MWs."""

    id: str
    bus: str
    s_rated: float  # MVA
    h: float  # s
    p_set: float  # MW
    p_max: float
    p_min: float = 0.0
    q_set: float = 0.0  # MVAr
    d: float = 0.0  # pu damping (pu power per pu frequency deviation)
    droop_r: float = 0.05  # pu governor droop
    t_gov: float = 0.5  # s
    online: bool = True
    is_large_unit: bool = False


@dataclass(frozen=True)
class IbrUnit:
    """Inverter-based resource: wind, solar or an HVDC interconnector.
    Contributes no inertia. For ``hvdc``, p is signed: negative = export."""

    id: str
    bus: str
    kind: str  # wind | solar | hvdc
    p: float  # MW
    q: float = 0.0
    online: bool = True


@dataclass(frozen=True)
class Load:
    id: str
    bus: str
    p: float  # MW
    q: float = 0.0
    freq_sensitivity: float = 0.0  # pu load change per Hz deviation


@dataclass(frozen=True)
class Snapshot:
    timestamp: int  # UTC seconds
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    machines: tuple[SyncMachine, ...]
    ibr_units: tuple[IbrUnit, ...]
    loads: tuple[Load, ...]
    base_mva: float = 100.0
    nominal_hz: float = 50.0

    def bus(self, bus_id: str) -> Bus:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise UnknownElementError(f"unknown bus {bus_id!r}")

    def machine(self, machine_id: str) -> SyncMachine:
        for m in self.machines:
            if m.id == machine_id:
                return m
        raise UnknownElementError(f"unknown machine {machine_id!r}")


@dataclass(frozen=True)
class SystemMetrics:
    """Cycle-level operating condition summary.

    ``inertia_mws`` is total stored kinetic energy of online synchronous
    machines (sum of h*s_rated, MWs). ``snsp_pct`` uses the operator
    convention: non-synchronous generation plus HVDC imports over demand
    plus HVDC exports, network losses excluded from the denominator.
    """

    inertia_mws: float
    demand_mw: float
    wind_mw: float
    snsp_pct: float
    muon_count: int
    net_interchange_mw: float
    muon_by_region: dict[str, int] = field(default_factory=dict)


# --- ingestion -------------------------------------------------------------

_SCHEMA = {
    "buses": Bus,
    "branches": Branch,
    "machines": SyncMachine,
    "ibr_units": IbrUnit,
    "loads": Load,
}

_TOP_KEYS = ("timestamp", "base_mva", "nominal_hz") + tuple(_SCHEMA)


def _element_fields(cls) -> dict[str, object]:
    return {f.name: f for f in cls.__dataclass_fields__.values()}


def _coerce(cls, raw: dict, collection: str, strict: bool, warnings: list[str]):
    fields = _element_fields(cls)
    ident = raw.get("id", "<missing id>")
    unknown = set(raw) - set(fields)
    if unknown:
        msg = f"{collection} {ident!r}: unknown keys {sorted(unknown)}"
        if strict:
            raise ParseError(msg)
        warnings.append(msg)
    kwargs = {}
    for name, f in fields.items():
        if name in raw:
            kwargs[name] = raw[name]
        elif f.default is MISSING and f.default_factory is MISSING:
            raise ParseError(f"{collection} {ident!r}: missing field {name!r}")
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ParseError(f"{collection} {ident!r}: {exc}") from exc


def load_snapshot(
    source: Union[str, bytes, IO, os.PathLike], strict: bool = True,
    warnings: list[str] | None = None,
) -> Snapshot:
    """Parse and validate a snapshot document.

    ``source`` may be a JSON string, bytes, a readable file object, or
    a path-like (a plain str is always treated as JSON text). In strict
    mode unknown keys raise ParseError; otherwise they are appended to
    ``warnings`` (if given) and ignored.
    """
    if isinstance(source, os.PathLike):
        try:
            source = Path(source).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read snapshot: {exc}") from exc
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed snapshot document: {exc}") from exc
    return snapshot_from_document(doc, strict=strict, warnings=warnings)


def snapshot_from_document(
    doc: dict, strict: bool = True, warnings: list[str] | None = None
) -> Snapshot:
    if warnings is None:
        warnings = []
    if not isinstance(doc, dict):
        raise ParseError("snapshot document must be a JSON object")
    unknown = set(doc) - set(_TOP_KEYS)
    if unknown:
        msg = f"unknown top-level keys {sorted(unknown)}"
        if strict:
            raise ParseError(msg)
        warnings.append(msg)
    for key in ("timestamp", "buses", "machines", "loads"):
        if key not in doc:
            raise ParseError(f"missing top-level key {key!r}")

    collections: dict[str, tuple] = {}
    for key, cls in _SCHEMA.items():
        raws = doc.get(key, [])
        if not isinstance(raws, list):
            raise ParseError(f"{key} must be a list")
        collections[key] = tuple(
            _coerce(cls, raw, key, strict, warnings) for raw in raws
        )

    snap = Snapshot(
        timestamp=int(doc["timestamp"]),
        base_mva=float(doc.get("base_mva", 100.0)),
        nominal_hz=float(doc.get("nominal_hz", 50.0)),
        buses=collections["buses"],
        branches=collections["branches"],
        machines=collections["machines"],
        ibr_units=collections["ibr_units"],
        loads=collections["loads"],
    )
    validate_snapshot(snap)
    return snap


def snapshot_to_document(snap: Snapshot) -> dict:
    """Serialize to the document form; round-trips through load_snapshot."""
    def row(el) -> dict:
        return {name: getattr(el, name) for name in el.__dataclass_fields__}

    return {
        "timestamp": snap.timestamp,
        "base_mva": snap.base_mva,
        "nominal_hz": snap.nominal_hz,
        "buses": [row(b) for b in snap.buses],
        "branches": [row(b) for b in snap.branches],
        "machines": [row(m) for m in snap.machines],
        "ibr_units": [row(u) for u in snap.ibr_units],
        "loads": [row(ld) for ld in snap.loads],
    }


def serialize_snapshot(snap: Snapshot) -> str:
    return json.dumps(snapshot_to_document(snap), indent=1)


# --- validation ------------------------------------------------------------

def _check_unique(ids: Iterable[str], collection: str) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            raise ValidationError(f"duplicate {collection} id {i!r}")
        seen.add(i)


def connected_components(snap: Snapshot) -> list[set[str]]:
    """Bus islands induced by in-service branches."""
    adj: dict[str, list[str]] = {b.id: [] for b in snap.buses}
    for br in snap.branches:
        if br.in_service:
            adj[br.from_bus].append(br.to_bus)
            adj[br.to_bus].append(br.from_bus)
    unseen = set(adj)
    comps = []
    while unseen:
        root = min(unseen)  # deterministic order
        stack, comp = [root], {root}
        unseen.discard(root)
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt in unseen:
                    unseen.discard(nxt)
                    comp.add(nxt)
                    stack.append(nxt)
        comps.append(comp)
    comps.sort(key=min)
    return comps


def validate_snapshot(snap: Snapshot) -> None:
    bus_ids = {b.id for b in snap.buses}
    if not snap.buses:
        raise ValidationError("snapshot has no buses")
    if snap.base_mva <= 0:
        raise ValidationError("base_mva must be positive")
    if snap.nominal_hz <= 0:
        raise ValidationError("nominal_hz must be positive")
    _check_unique((b.id for b in snap.buses), "bus")
    _check_unique((b.id for b in snap.branches), "branch")
    _check_unique((m.id for m in snap.machines), "machine")
    _check_unique((u.id for u in snap.ibr_units), "ibr_unit")
    _check_unique((ld.id for ld in snap.loads), "load")

    for b in snap.buses:
        if b.kind not in BUS_KINDS:
            raise ValidationError(f"bus {b.id!r}: invalid kind {b.kind!r}")
        if b.region not in REGIONS:
            raise ValidationError(f"bus {b.id!r}: invalid region {b.region!r}")
        if not b.v_mag > 0:
            raise ValidationError(f"bus {b.id!r}: v_mag must be > 0")
        if not b.nominal_kv > 0:
            raise ValidationError(f"bus {b.id!r}: nominal_kv must be > 0")

    for br in snap.branches:
        for end, ref in (("from_bus", br.from_bus), ("to_bus", br.to_bus)):
            if ref not in bus_ids:
                raise ValidationError(
                    f"branch {br.id!r}: {end} references unknown bus {ref!r}"
                )
        if br.from_bus == br.to_bus:
            raise ValidationError(f"branch {br.id!r}: from_bus equals to_bus")
        if br.x == 0:
            raise ValidationError(f"branch {br.id!r}: x must be nonzero")
        if not br.mva_rating > 0:
            raise ValidationError(f"branch {br.id!r}: mva_rating must be > 0")

    for m in snap.machines:
        if m.bus not in bus_ids:
            raise ValidationError(f"machine {m.id!r}: unknown bus {m.bus!r}")
        if not m.h > 0:
            raise ValidationError(f"machine {m.id!r}: h must be > 0")
        if not m.s_rated > 0:
            raise ValidationError(f"machine {m.id!r}: s_rated must be > 0")
        if not 0 < m.droop_r <= 1:
            raise ValidationError(f"machine {m.id!r}: droop_r outside (0, 1]")
        if not m.t_gov > 0:
            raise ValidationError(f"machine {m.id!r}: t_gov must be > 0")
        if m.online and not m.p_min <= m.p_set <= m.p_max:
            raise ValidationError(
                f"machine {m.id!r}: p_set {m.p_set} outside "
                f"[{m.p_min}, {m.p_max}] while online"
            )

    for u in snap.ibr_units:
        if u.bus not in bus_ids:
            raise ValidationError(f"ibr_unit {u.id!r}: unknown bus {u.bus!r}")
        if u.kind not in IBR_KINDS:
            raise ValidationError(f"ibr_unit {u.id!r}: invalid kind {u.kind!r}")
        if u.kind in ("wind", "solar") and u.p < 0:
            raise ValidationError(f"ibr_unit {u.id!r}: {u.kind} p must be >= 0")

    for ld in snap.loads:
        if ld.bus not in bus_ids:
            raise ValidationError(f"load {ld.id!r}: unknown bus {ld.bus!r}")
        if ld.p < 0:
            raise ValidationError(f"load {ld.id!r}: p must be >= 0")
        if ld.freq_sensitivity < 0:
            raise ValidationError(f"load {ld.id!r}: freq_sensitivity must be >= 0")

    if not any(m.online for m in snap.machines):
        raise ValidationError("snapshot has no online machines")

    # one slack per electrical island
    slack_buses = {b.id for b in snap.buses if b.kind == "slack"}
    for comp in connected_components(snap):
        n_slack = len(comp & slack_buses)
        if n_slack != 1:
            raise ValidationError(
                f"island containing bus {min(comp)!r} has {n_slack} slack "
                f"buses, expected exactly 1"
            )


# --- derived metrics -------------------------------------------------------

def system_metrics(snap: Snapshot) -> SystemMetrics:
    """Compute inertia, demand, wind, SNSP, MUON and net interchange."""
    inertia = sum(m.h * m.s_rated for m in snap.machines if m.online)
    demand = sum(ld.p for ld in snap.loads)
    wind = sum(u.p for u in snap.ibr_units if u.online and u.kind == "wind")
    solar = sum(u.p for u in snap.ibr_units if u.online and u.kind == "solar")
    hvdc = [u.p for u in snap.ibr_units if u.online and u.kind == "hvdc"]
    imports = sum(p for p in hvdc if p > 0)
    exports = sum(-p for p in hvdc if p < 0)

    denom = demand + exports
    if denom <= 0:
        raise DegenerateError(
            "SNSP undefined: demand plus HVDC exports is zero"
        )
    snsp = 100.0 * (wind + solar + imports) / denom

    by_region: dict[str, int] = {r: 0 for r in REGIONS}
    bus_region = {b.id: b.region for b in snap.buses}
    muon = 0
    for m in snap.machines:
        if m.online and m.is_large_unit:
            muon += 1
            by_region[bus_region[m.bus]] += 1

    return SystemMetrics(
        inertia_mws=inertia,
        demand_mw=demand,
        wind_mw=wind,
        snsp_pct=snsp,
        muon_count=muon,
        net_interchange_mw=sum(hvdc),
        muon_by_region=by_region,
    )


# --- what-if modifications -------------------------------------------------

@dataclass(frozen=True)
class Modification:
    """One dispatch or commitment change.

    ``p_set`` applies to machines, ``p``/``q`` to IBR units, ``online`` to
    either. Fields left as None are untouched.
    """

    element: str
    p_set: float | None = None
    p: float | None = None
    q: float | None = None
    online: bool | None = None

    @classmethod
    def from_document(cls, raw: dict) -> "Modification":
        if not isinstance(raw, dict) or "element" not in raw:
            raise ParseError(f"modification must name an element: {raw!r}")
        unknown = set(raw) - {"element", "p_set", "p", "q", "online"}
        if unknown:
            raise ParseError(f"modification has unknown keys {sorted(unknown)}")
        return cls(
            element=raw["element"],
            p_set=raw.get("p_set"),
            p=raw.get("p"),
            q=raw.get("q"),
            online=raw.get("online"),
        )

    def to_document(self) -> dict:
        doc: dict = {"element": self.element}
        for name in ("p_set", "p", "q", "online"):
            val = getattr(self, name)
            if val is not None:
                doc[name] = val
        return doc


def apply_modifications(
    snap: Snapshot, mods: Iterable[Modification]
) -> Snapshot:
    """Return a new snapshot with the modifications applied.

    The input snapshot is never mutated; validation runs on the result so
    a modification cannot smuggle in an invalid state.
    """
    machines = {m.id: m for m in snap.machines}
    ibrs = {u.id: u for u in snap.ibr_units}

    for mod in mods:
        if mod.element in machines:
            m = machines[mod.element]
            changes: dict = {}
            if mod.online is not None:
                changes["online"] = mod.online
            if mod.p_set is not None:
                changes["p_set"] = mod.p_set
            if mod.p is not None or mod.q is not None:
                raise LimitError(
                    f"machine {mod.element!r}: use p_set, not p/q"
                )
            m = replace(m, **changes)
            if m.online and not m.p_min <= m.p_set <= m.p_max:
                raise LimitError(
                    f"machine {m.id!r}: p_set {m.p_set} outside "
                    f"[{m.p_min}, {m.p_max}]"
                )
            machines[mod.element] = m
        elif mod.element in ibrs:
            u = ibrs[mod.element]
            changes = {}
            if mod.online is not None:
                changes["online"] = mod.online
            if mod.p is not None:
                changes["p"] = mod.p
            if mod.q is not None:
                changes["q"] = mod.q
            if mod.p_set is not None:
                raise LimitError(f"ibr_unit {mod.element!r}: use p, not p_set")
            u = replace(u, **changes)
            if u.kind in ("wind", "solar") and u.p < 0:
                raise LimitError(f"ibr_unit {u.id!r}: {u.kind} p must be >= 0")
            ibrs[mod.element] = u
        else:
            raise UnknownElementError(
                f"modification targets unknown element {mod.element!r}"
            )

    out = replace(
        snap,
        machines=tuple(machines[m.id] for m in snap.machines),
        ibr_units=tuple(ibrs[u.id] for u in snap.ibr_units),
    )
    validate_snapshot(out)
    return out


def total_generation_mw(snap: Snapshot) -> float:
    gen = sum(m.p_set for m in snap.machines if m.online)
    gen += sum(u.p for u in snap.ibr_units if u.online)
    return gen


def power_balance_gap_mw(snap: Snapshot) -> float:
    """Scheduled generation minus demand; absorbed by the slack in solution."""
    return total_generation_mw(snap) - sum(ld.p for ld in snap.loads)

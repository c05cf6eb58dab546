"""Contingency definitions, N-1 set construction and event application."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import AlreadyOutError, UnknownElementError, ValidationError
from .netmodel import Snapshot

CONTINGENCY_KINDS = (
    "gen_trip",
    "line_trip",
    "ibr_trip",
    "hvdc_trip",
    "system_split",
    "machine_fault",
)


@dataclass(frozen=True)
class Contingency:
    """One credible event to screen.

    kind:
      gen_trip      instant loss of one synchronous machine
      line_trip     opening of one branch
      ibr_trip      loss of one wind or solar unit
      hvdc_trip     loss of one HVDC interconnector pole
      system_split  simultaneous opening of a declared set of tie branches
      machine_fault three-phase fault at a machine terminal, cleared
                    after clear_s without tripping anything

    Default id is "{kind}:{elements}"; system splits carry their declared
    name instead.
    """

    kind: str
    elements: tuple[str, ...]
    id: str = ""
    description: str = ""
    clear_s: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in CONTINGENCY_KINDS:
            raise ValidationError(f"invalid contingency kind {self.kind!r}")
        if not self.elements:
            raise ValidationError("contingency names no elements")
        if self.kind == "machine_fault" and not self.clear_s > 0:
            raise ValidationError("machine_fault requires clear_s > 0")
        if not self.id:
            object.__setattr__(
                self, "id", f"{self.kind}:{','.join(self.elements)}"
            )


def build_contingency_set(
    snap: Snapshot,
    ibr_mw_floor: float = 0.0,
    splits: tuple[tuple[str, tuple[str, ...]], ...] = (),
) -> list[Contingency]:
    """Enumerate the N-1 contingency set for a snapshot.

    One contingency per online machine, in-service branch and online IBR
    or HVDC unit at or above ``ibr_mw_floor`` (absolute MW), plus one per
    declared system split (name, branch ids). Sorted by id so screening
    order is reproducible.
    """
    out: list[Contingency] = []
    out.extend(
        Contingency("gen_trip", (m.id,)) for m in snap.machines if m.online
    )
    out.extend(
        Contingency("line_trip", (br.id,))
        for br in snap.branches if br.in_service
    )
    for u in snap.ibr_units:
        if not u.online or abs(u.p) < ibr_mw_floor:
            continue
        kind = "hvdc_trip" if u.kind == "hvdc" else "ibr_trip"
        out.append(Contingency(kind, (u.id,)))
    for name, branch_ids in splits:
        out.append(Contingency(
            "system_split", tuple(branch_ids),
            id=f"system_split:{name}", description=name,
        ))
    out.sort(key=lambda c: c.id)
    return out


def apply_contingency(snap: Snapshot, cont: Contingency) -> Snapshot:
    """Post-event snapshot. No re-validation: a contingency may leave
    islands without a slack; the power flow decides how to handle those.

    machine_fault leaves the network untouched (the fault is a transient
    the dynamic simulation applies and clears itself).
    """
    if cont.kind == "machine_fault":
        snap.machine(cont.elements[0])  # existence check only
        return snap

    machines = list(snap.machines)
    branches = list(snap.branches)
    ibr_units = list(snap.ibr_units)

    for el in cont.elements:
        if cont.kind == "gen_trip":
            idx = _index(machines, el, "machine")
            if not machines[idx].online:
                raise AlreadyOutError(f"machine {el!r} is already offline")
            machines[idx] = replace(machines[idx], online=False)
        elif cont.kind in ("line_trip", "system_split"):
            idx = _index(branches, el, "branch")
            if not branches[idx].in_service:
                raise AlreadyOutError(f"branch {el!r} is already open")
            branches[idx] = replace(branches[idx], in_service=False)
        elif cont.kind in ("ibr_trip", "hvdc_trip"):
            idx = _index(ibr_units, el, "ibr_unit")
            if not ibr_units[idx].online:
                raise AlreadyOutError(f"ibr_unit {el!r} is already offline")
            ibr_units[idx] = replace(ibr_units[idx], online=False)

    return replace(
        snap,
        machines=tuple(machines),
        branches=tuple(branches),
        ibr_units=tuple(ibr_units),
    )


def _index(elements, el_id: str, collection: str) -> int:
    for i, e in enumerate(elements):
        if e.id == el_id:
            return i
    raise UnknownElementError(f"unknown {collection} {el_id!r}")

"""AC power flow: full Newton-Raphson in polar coordinates.

Solves each electrical island separately. Islands with no online
synchronous machine are de-energized: their buses report zero voltage and
their branches carry no flow. The island containing a slack-kind bus uses
it as reference; islands created by a split that lack one either raise
IslandError or, with ``promote_slack``, use the bus of their largest
online machine as a stand-in reference.

Mismatch convergence is on the max absolute power imbalance in pu.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IslandError, NotConvergedError, SingularJacobianError
from .netmodel import Snapshot, connected_components

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 20
_DIVERGED = 1e6  # pu mismatch beyond which iteration is pointless


@dataclass
class BranchFlow:
    p_from_mw: float
    q_from_mvar: float
    p_to_mw: float
    q_to_mvar: float
    loading_pct: float


@dataclass
class PowerFlowResult:
    converged: bool
    iterations: int
    max_mismatch_pu: float
    bus_ids: tuple[str, ...]
    v_mag: np.ndarray
    v_ang: np.ndarray  # radians
    islands: tuple[tuple[str, ...], ...]  # energized islands only
    dead_buses: frozenset[str]
    slack_buses: dict[int, str]  # island index -> reference bus id
    machine_p_mw: dict[str, float]
    machine_q_mvar: dict[str, float]
    branch_flows: dict[str, BranchFlow]
    notes: list[str] = field(default_factory=list)

    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def bus_v_mag(self, bus_id: str) -> float:
        return float(self.v_mag[self._index[bus_id]])

    def bus_v_ang(self, bus_id: str) -> float:
        return float(self.v_ang[self._index[bus_id]])

    def bus_voltage(self, bus_id: str) -> complex:
        i = self._index[bus_id]
        return complex(self.v_mag[i] * np.exp(1j * self.v_ang[i]))


def build_ybus(snap: Snapshot, index: dict[str, int]) -> np.ndarray:
    n = len(index)
    Y = np.zeros((n, n), dtype=complex)
    for br in snap.branches:
        if not br.in_service:
            continue
        f, t = index[br.from_bus], index[br.to_bus]
        ys = 1.0 / complex(br.r, br.x)
        ysh = 0.5j * br.b_shunt
        Y[f, f] += ys + ysh
        Y[t, t] += ys + ysh
        Y[f, t] -= ys
        Y[t, f] -= ys
    return Y


def scheduled_injections(snap: Snapshot) -> tuple[np.ndarray, np.ndarray]:
    """Net scheduled P, Q per bus in MW/MVAr (loads negative)."""
    index = {b.id: i for i, b in enumerate(snap.buses)}
    p = np.zeros(len(snap.buses))
    q = np.zeros(len(snap.buses))
    for m in snap.machines:
        if m.online:
            p[index[m.bus]] += m.p_set
            q[index[m.bus]] += m.q_set
    for u in snap.ibr_units:
        if u.online:
            p[index[u.bus]] += u.p
            q[index[u.bus]] += u.q
    for ld in snap.loads:
        p[index[ld.bus]] -= ld.p
        q[index[ld.bus]] -= ld.q
    return p, q


def _newton_island(
    Y: np.ndarray,
    V: np.ndarray,
    Sbus: np.ndarray,
    pv: np.ndarray,
    pq: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, bool, int, float]:
    """Polar NR on one island. Arrays are local to the island; the slack
    is whatever index is in neither pv nor pq."""
    pvpq = np.concatenate([pv, pq])
    npv, npq = len(pv), len(pq)

    def mismatch(V):
        S = V * np.conj(Y @ V)
        dS = S - Sbus
        return np.concatenate([dS[pvpq].real, dS[pq].imag])

    F = mismatch(V)
    norm = float(np.max(np.abs(F))) if F.size else 0.0
    if norm < tol:
        return V, True, 0, norm

    Vm = np.abs(V)
    Va = np.angle(V)
    for it in range(1, max_iter + 1):
        diagV = np.diag(V)
        Ibus = Y @ V
        diagI = np.diag(Ibus)
        diagVnorm = np.diag(V / np.abs(V))
        dS_dVa = 1j * diagV @ np.conj(diagI - Y @ diagV)
        dS_dVm = diagV @ np.conj(Y @ diagVnorm) + np.conj(diagI) @ diagVnorm

        J11 = dS_dVa[np.ix_(pvpq, pvpq)].real
        J12 = dS_dVm[np.ix_(pvpq, pq)].real
        J21 = dS_dVa[np.ix_(pq, pvpq)].imag
        J22 = dS_dVm[np.ix_(pq, pq)].imag
        J = np.block([[J11, J12], [J21, J22]])

        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            if it == 1:
                raise SingularJacobianError(
                    "singular Jacobian on first iteration", iteration=it
                ) from exc
            return V, False, it, norm

        Va[pvpq] += dx[: npv + npq]
        Vm[pq] += dx[npv + npq:]
        V = Vm * np.exp(1j * Va)

        F = mismatch(V)
        if not np.all(np.isfinite(F)):
            return V, False, it, float("inf")
        norm = float(np.max(np.abs(F)))
        if norm < tol:
            return V, True, it, norm
        if norm > _DIVERGED:
            return V, False, it, norm
    return V, False, max_iter, norm


def solve(
    snap: Snapshot,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    promote_slack: bool = False,
) -> PowerFlowResult:
    """Solve the snapshot's power flow.

    Raises IslandError when an energized island has no slack-kind bus and
    ``promote_slack`` is off, and SingularJacobianError when a Jacobian is
    singular before any progress was made. Plain failure to converge is
    reported in the result, never raised.
    """
    index = {b.id: i for i, b in enumerate(snap.buses)}
    n = len(snap.buses)
    Y = build_ybus(snap, index)
    p_mw, q_mvar = scheduled_injections(snap)
    Sbus = (p_mw + 1j * q_mvar) / snap.base_mva

    online_machine_buses: dict[str, list] = {}
    for m in snap.machines:
        if m.online:
            online_machine_buses.setdefault(m.bus, []).append(m)

    v_mag = np.zeros(n)
    v_ang = np.zeros(n)
    notes: list[str] = []
    energized: list[tuple[str, ...]] = []
    dead: set[str] = set()
    slack_by_island: dict[int, str] = {}
    converged_all = True
    iterations = 0
    worst = 0.0

    for comp in connected_components(snap):
        members = sorted(comp, key=lambda b: index[b])
        machines_here = [
            m for bid in members for m in online_machine_buses.get(bid, [])
        ]
        if not machines_here:
            dead.update(members)
            notes.append(
                f"island containing {members[0]} de-energized "
                f"(no online machine)"
            )
            continue

        slack_id = next(
            (b for b in members if snap.buses[index[b]].kind == "slack"), None
        )
        if slack_id is None:
            if not promote_slack:
                raise IslandError(
                    f"island containing {members[0]} has no slack bus"
                )
            biggest = max(machines_here, key=lambda m: (m.s_rated, m.id))
            slack_id = biggest.bus
            notes.append(
                f"island containing {members[0]}: promoted {slack_id} "
                f"to reference (machine {biggest.id})"
            )

        loc = {bid: k for k, bid in enumerate(members)}
        gidx = np.array([index[b] for b in members])
        Yi = Y[np.ix_(gidx, gidx)]
        Si = Sbus[gidx]
        V0 = np.array([
            snap.buses[index[b]].v_mag * np.exp(1j * snap.buses[index[b]].v_ang)
            for b in members
        ])

        pv_list, pq_list = [], []
        for bid in members:
            b = snap.buses[index[bid]]
            if bid == slack_id:
                continue
            if b.kind == "PV" and bid in online_machine_buses:
                pv_list.append(loc[bid])
            else:
                pq_list.append(loc[bid])
        pv = np.array(pv_list, dtype=int)
        pq = np.array(pq_list, dtype=int)

        Vi, ok, iters, norm = _newton_island(
            Yi, V0, Si, pv, pq, tol, max_iter
        )
        converged_all &= ok
        iterations = max(iterations, iters)
        worst = max(worst, norm)
        v_mag[gidx] = np.abs(Vi)
        v_ang[gidx] = np.angle(Vi)
        slack_by_island[len(energized)] = slack_id
        energized.append(tuple(members))
        if not ok:
            notes.append(
                f"island containing {members[0]} did not converge "
                f"(mismatch {norm:.3g} pu after {iters} iterations)"
            )

    result = PowerFlowResult(
        converged=converged_all,
        iterations=iterations,
        max_mismatch_pu=worst,
        bus_ids=tuple(b.id for b in snap.buses),
        v_mag=v_mag,
        v_ang=v_ang,
        islands=tuple(energized),
        dead_buses=frozenset(dead),
        slack_buses=slack_by_island,
        machine_p_mw={},
        machine_q_mvar={},
        branch_flows={},
        notes=notes,
        _index=index,
    )
    if converged_all:
        _fill_outputs(snap, Y, result, online_machine_buses)
    return result


def _fill_outputs(snap, Y, res, online_machine_buses) -> None:
    """Machine outputs and branch flows from the solved voltages."""
    index = res._index
    V = res.v_mag * np.exp(1j * res.v_ang)
    S_inj = V * np.conj(Y @ V) * snap.base_mva  # MW + jMVAr

    load_p = np.zeros(len(snap.buses))
    load_q = np.zeros(len(snap.buses))
    for ld in snap.loads:
        load_p[index[ld.bus]] += ld.p
        load_q[index[ld.bus]] += ld.q
    ibr_p = np.zeros(len(snap.buses))
    ibr_q = np.zeros(len(snap.buses))
    for u in snap.ibr_units:
        if u.online:
            ibr_p[index[u.bus]] += u.p
            ibr_q[index[u.bus]] += u.q

    slack_ids = set(res.slack_buses.values())
    for bus_id, machines in online_machine_buses.items():
        if bus_id in res.dead_buses:
            continue
        i = index[bus_id]
        kind = snap.buses[i].kind
        total_s = sum(m.s_rated for m in machines)
        if bus_id in slack_ids:
            p_total = S_inj[i].real + load_p[i] - ibr_p[i]
            q_total = S_inj[i].imag + load_q[i] - ibr_q[i]
            for m in machines:
                share = m.s_rated / total_s
                res.machine_p_mw[m.id] = p_total * share
                res.machine_q_mvar[m.id] = q_total * share
        elif kind == "PV":
            q_total = S_inj[i].imag + load_q[i] - ibr_q[i]
            for m in machines:
                res.machine_p_mw[m.id] = m.p_set
                res.machine_q_mvar[m.id] = q_total * m.s_rated / total_s
        else:
            for m in machines:
                res.machine_p_mw[m.id] = m.p_set
                res.machine_q_mvar[m.id] = m.q_set

    for br in snap.branches:
        if not br.in_service:
            res.branch_flows[br.id] = BranchFlow(0.0, 0.0, 0.0, 0.0, 0.0)
            continue
        f, t = index[br.from_bus], index[br.to_bus]
        if br.from_bus in res.dead_buses or br.to_bus in res.dead_buses:
            res.branch_flows[br.id] = BranchFlow(0.0, 0.0, 0.0, 0.0, 0.0)
            continue
        ys = 1.0 / complex(br.r, br.x)
        ysh = 0.5j * br.b_shunt
        s_f = V[f] * np.conj((V[f] - V[t]) * ys + V[f] * ysh) * snap.base_mva
        s_t = V[t] * np.conj((V[t] - V[f]) * ys + V[t] * ysh) * snap.base_mva
        loading = 100.0 * max(abs(s_f), abs(s_t)) / br.mva_rating
        res.branch_flows[br.id] = BranchFlow(
            p_from_mw=float(s_f.real),
            q_from_mvar=float(s_f.imag),
            p_to_mw=float(s_t.real),
            q_to_mvar=float(s_t.imag),
            loading_pct=float(loading),
        )


def solve_strict(snap: Snapshot, **kwargs) -> PowerFlowResult:
    """solve(), but a non-converged case is an error."""
    res = solve(snap, **kwargs)
    if not res.converged:
        raise NotConvergedError(
            f"power flow did not converge "
            f"(mismatch {res.max_mismatch_pu:.3g} pu)"
        )
    return res

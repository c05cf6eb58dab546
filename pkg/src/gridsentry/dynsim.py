"""Time-domain simulation of the post-contingency transient.

Two network models, one state layout. States are per synchronous machine:
rotor angle delta (rad), electrical frequency f (Hz) and mechanical power
p_m (MW), advanced with a fixed step.

coi_uniform
    Every machine in an electrical island sees the same island-wide
    frequency; the network reduces to per-island power balances taken
    from the solved base-case flows. Fast, used for bulk screening.

dc_network
    Classical multi-machine model: constant EMF behind transient
    reactance, loads and IBR injections converted to constant shunt
    admittances at their solved voltages, network reduced to the machine
    internal nodes. Electrical power couples through the sine of angle
    differences, so inter-machine swings and pole slips are represented.

Both models start from the AC power flow operating point and are in exact
(coi) or near-machine-precision (dc) equilibrium when no event is applied.
The governor is a first-order lag toward a droop target clamped to the
unit's power limits; p_m is re-clamped after every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contingency import Contingency, apply_contingency
from .errors import InitError, NumericalError
from .netmodel import Snapshot, connected_components
from .powerflow import PowerFlowResult, build_ybus, solve

INTEGRATORS = ("trapezoidal", "rk4")
NETWORK_MODELS = ("coi_uniform", "dc_network")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.005  # s
    t_end: float = 10.0
    event_t: float = 0.5
    integrator: str = "trapezoidal"
    network_model: str = "coi_uniform"
    machine_x_pu: float = 0.25  # transient reactance, machine base
    fp_tol: float = 1e-12
    fp_max_iter: int = 60

    def validate(self) -> None:
        if self.dt <= 0:
            raise InitError("dt must be positive")
        if self.t_end < self.dt:
            raise InitError("t_end shorter than one step")
        if self.event_t < 0:
            raise InitError("event_t must be >= 0")
        if self.integrator not in INTEGRATORS:
            raise InitError(f"unknown integrator {self.integrator!r}")
        if self.network_model not in NETWORK_MODELS:
            raise InitError(f"unknown network model {self.network_model!r}")
        if self.machine_x_pu <= 0:
            raise InitError("machine_x_pu must be positive")


@dataclass
class SimResult:
    t: np.ndarray
    machine_ids: tuple[str, ...]
    f: np.ndarray  # (n_t, n_machines), Hz
    delta: np.ndarray  # rad
    p_m: np.ndarray  # MW
    f_coi: np.ndarray  # inertia-weighted mean over surviving machines
    active: np.ndarray  # bool, machines still connected at t_end
    islands: tuple[tuple[str, ...], ...]  # final machine grouping
    tripped: tuple[str, ...]
    event_t: float
    dt: float
    hs: np.ndarray = None  # per-machine stored energy H*S, MWs

    def trace_of(self, machine_id: str) -> np.ndarray:
        return self.f[:, self.machine_ids.index(machine_id)]

    def delta_of(self, machine_id: str) -> np.ndarray:
        return self.delta[:, self.machine_ids.index(machine_id)]


# --- machine static data ----------------------------------------------------

@dataclass
class _Fleet:
    ids: tuple[str, ...]
    bus: tuple[str, ...]
    h: np.ndarray
    s: np.ndarray
    d: np.ndarray
    droop: np.ndarray
    t_gov: np.ndarray
    p_min: np.ndarray
    p_max: np.ndarray
    f_nom: float
    base: float

    @property
    def hs(self) -> np.ndarray:
        return self.h * self.s  # stored energy, MWs


def _fleet(snap: Snapshot) -> _Fleet:
    ms = [m for m in snap.machines if m.online]
    if not ms:
        raise InitError("no online machines to simulate")
    return _Fleet(
        ids=tuple(m.id for m in ms),
        bus=tuple(m.bus for m in ms),
        h=np.array([m.h for m in ms]),
        s=np.array([m.s_rated for m in ms]),
        d=np.array([m.d for m in ms]),
        droop=np.array([m.droop_r for m in ms]),
        t_gov=np.array([m.t_gov for m in ms]),
        p_min=np.array([m.p_min for m in ms]),
        p_max=np.array([m.p_max for m in ms]),
        f_nom=snap.nominal_hz,
        base=snap.base_mva,
    )


# --- stage construction ------------------------------------------------------

@dataclass
class _Stage:
    """One network configuration holding between two step indices."""
    start: int  # first step index integrated under this stage
    active: np.ndarray  # bool per machine
    islands: list[np.ndarray]  # active machine indices per island
    rhs: object  # callable(y) -> dy

    # per-island damping from frequency-sensitive loads, MW per Hz
    sens: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _machine_islands(
    snap: Snapshot, fleet: _Fleet, active: np.ndarray
) -> tuple[list[np.ndarray], list[set[str]]]:
    """Group active machines by electrical island of the given snapshot."""
    comps = connected_components(snap)
    groups: list[np.ndarray] = []
    bus_sets: list[set[str]] = []
    for comp in comps:
        idx = np.array([
            k for k in range(len(fleet.ids))
            if active[k] and fleet.bus[k] in comp
        ], dtype=int)
        if len(idx):
            groups.append(idx)
            bus_sets.append(comp)
    return groups, bus_sets


def _island_load_sens(snap: Snapshot, bus_set: set[str]) -> float:
    return sum(
        ld.p * ld.freq_sensitivity for ld in snap.loads if ld.bus in bus_set
    )


class _CoiRhs:
    """Per-island uniform-frequency power balance."""

    def __init__(self, fleet, groups, k_island, sens_island, p_ref):
        self.fleet = fleet
        self.groups = groups
        self.k_island = k_island
        self.sens = sens_island
        self.p_ref = p_ref

    def __call__(self, y: np.ndarray) -> np.ndarray:
        fl = self.fleet
        n = len(fl.ids)
        delta, f, p_m = y[:n], y[n:2 * n], y[2 * n:]
        dy = np.zeros_like(y)
        for gi, idx in enumerate(self.groups):
            f_isl = f[idx[0]]
            df_hz = f_isl - fl.f_nom
            p_e = self.k_island[gi] + self.sens[gi] * df_hz
            damp = np.sum(fl.d[idx] * fl.s[idx]) * df_hz / fl.f_nom
            m_isl = 2.0 * np.sum(fl.hs[idx]) / fl.f_nom
            acc = (np.sum(p_m[idx]) - p_e - damp) / m_isl
            dy[n + idx] = acc
            dy[idx] = 2.0 * np.pi * df_hz
            target = np.clip(
                self.p_ref[idx]
                + (fl.f_nom - f_isl) / (fl.droop[idx] * fl.f_nom) * fl.s[idx],
                fl.p_min[idx], fl.p_max[idx],
            )
            dy[2 * n + idx] = (target - p_m[idx]) / fl.t_gov[idx]
        return dy


class _DcRhs:
    """Reduced-network electrical power with sine angle coupling."""

    def __init__(self, fleet, groups, y_red, e_mag, sens_island, p_ref):
        self.fleet = fleet
        self.groups = groups  # active machine indices per island
        self.y_red = y_red  # (n_act, n_act) over flat active order
        self.e_mag = e_mag  # (n_act,)
        self.sens = sens_island
        self.p_ref = p_ref
        self.act = np.concatenate(groups) if groups else np.zeros(0, int)
        self.pos = {int(k): i for i, k in enumerate(self.act)}

    def __call__(self, y: np.ndarray) -> np.ndarray:
        fl = self.fleet
        n = len(fl.ids)
        delta, f, p_m = y[:n], y[n:2 * n], y[2 * n:]
        dy = np.zeros_like(y)
        act = self.act
        if not len(act):
            return dy

        e_vec = self.e_mag * np.exp(1j * delta[act])
        p_e = (e_vec * np.conj(self.y_red @ e_vec)).real * fl.base

        # frequency-sensitive load response, shared within each island
        # in proportion to stored energy
        for gi, idx in enumerate(self.groups):
            if self.sens[gi] == 0.0:
                continue
            w = fl.hs[idx] / np.sum(fl.hs[idx])
            f_coi = float(np.sum(fl.hs[idx] * f[idx]) / np.sum(fl.hs[idx]))
            p_e[[self.pos[int(k)] for k in idx]] += (
                self.sens[gi] * (f_coi - fl.f_nom) * w
            )

        df_hz = f[act] - fl.f_nom
        damp = fl.d[act] * fl.s[act] * df_hz / fl.f_nom
        dy[n + act] = (p_m[act] - p_e - damp) * fl.f_nom / (2.0 * fl.hs[act])
        dy[act] = 2.0 * np.pi * df_hz
        target = np.clip(
            self.p_ref[act]
            + (fl.f_nom - f[act]) / (fl.droop[act] * fl.f_nom) * fl.s[act],
            fl.p_min[act], fl.p_max[act],
        )
        dy[2 * n + act] = (target - p_m[act]) / fl.t_gov[act]
        return dy


def _coi_stage_pre(snap, fleet, pm0, p_ref) -> _Stage:
    active = np.ones(len(fleet.ids), dtype=bool)
    groups, bus_sets = _machine_islands(snap, fleet, active)
    k_island = np.array([float(np.sum(pm0[idx])) for idx in groups])
    sens = np.array([_island_load_sens(snap, bs) for bs in bus_sets])
    return _Stage(
        start=0, active=active, islands=groups,
        rhs=_CoiRhs(fleet, groups, k_island, sens, p_ref), sens=sens,
    )


def _coi_stage_post(
    pre: Snapshot, post: Snapshot, fleet, pm0, p_ref,
    pf: PowerFlowResult, start: int,
) -> _Stage:
    post_online = {m.id for m in post.machines if m.online}
    active = np.array([mid in post_online for mid in fleet.ids])
    groups, bus_sets = _machine_islands(post, fleet, active)

    pre_online_by_bus: dict[str, float] = {}
    for k, mid in enumerate(fleet.ids):
        pre_online_by_bus.setdefault(fleet.bus[k], 0.0)
        pre_online_by_bus[fleet.bus[k]] += pm0[k]

    removed = [
        br for br, br_post in zip(pre.branches, post.branches)
        if br.in_service and not br_post.in_service
    ]

    k_island = np.zeros(len(groups))
    sens = np.zeros(len(groups))
    for gi, bus_set in enumerate(bus_sets):
        pm_pre = sum(
            p for b, p in pre_online_by_bus.items() if b in bus_set
        )
        load_pre = sum(ld.p for ld in pre.loads if ld.bus in bus_set)
        load_post = sum(ld.p for ld in post.loads if ld.bus in bus_set)
        ibr_pre = sum(
            u.p for u in pre.ibr_units if u.online and u.bus in bus_set
        )
        ibr_post = sum(
            u.p for u in post.ibr_units if u.online and u.bus in bus_set
        )
        export = 0.0
        for br in removed:
            fl = pf.branch_flows[br.id]
            if br.from_bus in bus_set:
                export += fl.p_from_mw
            if br.to_bus in bus_set:
                export += fl.p_to_mw
        k_island[gi] = (
            load_post - ibr_post + pm_pre + ibr_pre - load_pre - export
        )
        sens[gi] = _island_load_sens(post, bus_set)

    return _Stage(
        start=start, active=active, islands=groups,
        rhs=_CoiRhs(fleet, groups, k_island, sens, p_ref), sens=sens,
    )


def _dc_reduction(
    snap: Snapshot, fleet, active: np.ndarray, cfg: SimConfig,
    pf: PowerFlowResult, grounded: str | None = None,
) -> tuple[list[np.ndarray], list[set[str]], np.ndarray, np.ndarray]:
    """Kron-reduce the network to the active machines' internal nodes.

    Returns (island groups, island bus sets, Y_red over the flat active
    order, admittance x' per active machine in system pu).
    """
    groups, bus_sets = _machine_islands(snap, fleet, active)
    act = np.concatenate(groups) if groups else np.zeros(0, int)
    index_all = {b.id: i for i, b in enumerate(snap.buses)}
    live_buses = sorted(
        {b for bs in bus_sets for b in bs}, key=index_all.__getitem__
    )
    if grounded is not None and grounded in live_buses:
        live_buses.remove(grounded)
    bpos = {b: i for i, b in enumerate(live_buses)}
    nb, na = len(live_buses), len(act)

    Yfull = build_ybus(snap, index_all)
    gsel = np.array([index_all[b] for b in live_buses], dtype=int)
    Ybb = Yfull[np.ix_(gsel, gsel)].copy()

    v_sq = np.array([max(pf.bus_v_mag(b), 1e-6) ** 2 for b in live_buses])
    s_sh = np.zeros(nb, dtype=complex)  # net non-machine injection, pu
    for ld in snap.loads:
        if ld.bus in bpos:
            s_sh[bpos[ld.bus]] -= complex(ld.p, ld.q) / snap.base_mva
    for u in snap.ibr_units:
        if u.online and u.bus in bpos:
            s_sh[bpos[u.bus]] += complex(u.p, u.q) / snap.base_mva
    Ybb[np.diag_indices(nb)] += -np.conj(s_sh) / v_sq

    x_sys = cfg.machine_x_pu * fleet.base / fleet.s[act]
    y_m = 1.0 / (1j * x_sys)
    Ygg = np.diag(y_m)
    Ygb = np.zeros((na, nb), dtype=complex)
    for i, k in enumerate(act):
        b = fleet.bus[int(k)]
        if b in bpos:
            Ygb[i, bpos[b]] = -y_m[i]
            Ybb[bpos[b], bpos[b]] += y_m[i]
    if nb:
        Y_red = Ygg - Ygb @ np.linalg.solve(Ybb, Ygb.T)
    else:
        Y_red = Ygg
    return groups, bus_sets, Y_red


def _dc_stage(
    snap, fleet, active, cfg, pf, e_mag_all, p_ref, start, grounded=None
) -> _Stage:
    groups, bus_sets, y_red = _dc_reduction(
        snap, fleet, active, cfg, pf, grounded=grounded
    )
    act = np.concatenate(groups) if groups else np.zeros(0, int)
    sens = np.array([_island_load_sens(snap, bs) for bs in bus_sets])
    rhs = _DcRhs(fleet, groups, y_red, e_mag_all[act], sens, p_ref)
    return _Stage(start=start, active=active, islands=groups, rhs=rhs,
                  sens=sens)


# --- integrators -------------------------------------------------------------

def _clamp_pm(y: np.ndarray, fleet: _Fleet) -> None:
    n = len(fleet.ids)
    np.clip(y[2 * n:], fleet.p_min, fleet.p_max, out=y[2 * n:])


def _step_trapezoidal(rhs, y, dt, cfg: SimConfig) -> np.ndarray:
    k1 = rhs(y)
    y_new = y + dt * k1  # Euler predictor
    for _ in range(cfg.fp_max_iter):
        y_next = y + 0.5 * dt * (k1 + rhs(y_new))
        gap = np.max(np.abs(y_next - y_new) /
                     np.maximum(1.0, np.abs(y_next)))
        y_new = y_next
        if gap < cfg.fp_tol:
            break
    return y_new


def _step_rk4(rhs, y, dt, cfg: SimConfig) -> np.ndarray:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


_STEPPERS = {"trapezoidal": _step_trapezoidal, "rk4": _step_rk4}


# --- top level ---------------------------------------------------------------

def simulate(
    snap: Snapshot,
    cont: Contingency | None = None,
    config: SimConfig | None = None,
    pf: PowerFlowResult | None = None,
) -> SimResult:
    """Run one transient study: hold the base operating point, apply the
    contingency at ``event_t``, integrate to ``t_end``.

    An already-solved base power flow can be passed to avoid re-solving
    when screening many contingencies from one snapshot.
    """
    cfg = config or SimConfig()
    cfg.validate()
    if pf is None:
        pf = solve(snap)
    if not pf.converged:
        raise InitError("base power flow did not converge")

    fleet = _fleet(snap)
    n = len(fleet.ids)
    pm0 = np.array([pf.machine_p_mw[mid] for mid in fleet.ids])
    p_ref = pm0.copy()
    off_dispatch = (pm0 < fleet.p_min - 1e-9) | (pm0 > fleet.p_max + 1e-9)
    if np.any(off_dispatch):
        bad = fleet.ids[int(np.argmax(off_dispatch))]
        raise InitError(
            f"machine {bad!r} operates outside its power limits in the "
            f"base case; no governor equilibrium exists"
        )

    if cont is not None and cont.kind == "machine_fault":
        if cfg.network_model != "dc_network":
            raise InitError("machine_fault requires the dc_network model")
        if cont.elements[0] not in fleet.ids:
            raise InitError(
                f"machine_fault targets offline machine "
                f"{cont.elements[0]!r}"
            )

    # initial states
    delta0 = np.zeros(n)
    e_mag = np.ones(n)
    if cfg.network_model == "dc_network":
        for k, mid in enumerate(fleet.ids):
            v_t = pf.bus_voltage(fleet.bus[k])
            s = complex(pm0[k], pf.machine_q_mvar[mid]) / fleet.base
            i_t = np.conj(s / v_t)
            x_sys = cfg.machine_x_pu * fleet.base / fleet.s[k]
            e = v_t + 1j * x_sys * i_t
            e_mag[k] = abs(e)
            delta0[k] = np.angle(e)
    else:
        for k in range(n):
            delta0[k] = pf.bus_v_ang(fleet.bus[k])

    y = np.concatenate([delta0, np.full(n, fleet.f_nom), pm0])

    n_steps = int(round(cfg.t_end / cfg.dt))
    event_idx = min(int(round(cfg.event_t / cfg.dt)), n_steps)
    stages: list[_Stage] = []
    post = snap if cont is None else apply_contingency(snap, cont)

    if cfg.network_model == "coi_uniform":
        stages.append(_coi_stage_pre(snap, fleet, pm0, p_ref))
        if cont is not None and event_idx < n_steps:
            stages.append(_coi_stage_post(
                snap, post, fleet, pm0, p_ref, pf, start=event_idx
            ))
    else:
        all_on = np.ones(n, dtype=bool)
        stages.append(
            _dc_stage(snap, fleet, all_on, cfg, pf, e_mag, p_ref, start=0)
        )
        if cont is not None and event_idx < n_steps:
            if cont.kind == "machine_fault":
                mid = cont.elements[0]
                bus = fleet.bus[fleet.ids.index(mid)]
                clear_idx = event_idx + max(
                    1, int(round(cont.clear_s / cfg.dt))
                )
                clear_idx = min(clear_idx, n_steps)
                stages.append(_dc_stage(
                    snap, fleet, all_on, cfg, pf, e_mag, p_ref,
                    start=event_idx, grounded=bus,
                ))
                if clear_idx < n_steps:
                    stages.append(_dc_stage(
                        snap, fleet, all_on, cfg, pf, e_mag, p_ref,
                        start=clear_idx,
                    ))
            else:
                post_online = {m.id for m in post.machines if m.online}
                active = np.array([m in post_online for m in fleet.ids])
                stages.append(_dc_stage(
                    post, fleet, active, cfg, pf, e_mag, p_ref,
                    start=event_idx,
                ))

    if not stages[-1].islands:
        raise InitError("event leaves no machine connected; nothing to study")

    # integrate
    step = _STEPPERS[cfg.integrator]
    t = np.arange(n_steps + 1) * cfg.dt
    f_trace = np.empty((n_steps + 1, n))
    d_trace = np.empty((n_steps + 1, n))
    pm_trace = np.empty((n_steps + 1, n))
    f_coi = np.empty(n_steps + 1)

    def record(i, y, stage):
        d_trace[i] = y[:n]
        f_trace[i] = y[n:2 * n]
        pm_trace[i] = y[2 * n:]
        w = fleet.hs * stage.active
        f_coi[i] = float(np.sum(w * y[n:2 * n]) / np.sum(w))

    stage_i = 0
    record(0, y, stages[0])
    frozen = ~stages[0].active
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_steps):
            while (stage_i + 1 < len(stages)
                   and stages[stage_i + 1].start <= i):
                stage_i += 1
                frozen = ~stages[stage_i].active
            held = np.concatenate([frozen, frozen, frozen])
            y_prev = y
            y = step(stages[stage_i].rhs, y, cfg.dt, cfg)
            y[held] = y_prev[held]
            _clamp_pm(y, fleet)
            if not np.all(np.isfinite(y)):
                raise NumericalError(
                    f"state became non-finite at t={t[i + 1]:.4f}s",
                    t=float(t[i + 1]),
                )
            record(i + 1, y, stages[stage_i])

    final = stages[-1]
    islands = tuple(
        tuple(fleet.ids[int(k)] for k in idx) for idx in final.islands
    )
    tripped = tuple(
        mid for k, mid in enumerate(fleet.ids) if not final.active[k]
    )
    return SimResult(
        t=t,
        machine_ids=fleet.ids,
        f=f_trace,
        delta=d_trace,
        p_m=pm_trace,
        f_coi=f_coi,
        active=final.active.copy(),
        islands=islands,
        tripped=tripped,
        event_t=float(event_idx * cfg.dt),
        dt=cfg.dt,
        hs=fleet.hs.copy(),
    )


def write_trace_csv(result: SimResult, fileobj) -> None:
    """Trace dump: one row per step, frequencies then angles."""
    ids = result.machine_ids
    header = ["t", "f_coi"]
    header += [f"f_{m}" for m in ids]
    header += [f"delta_{m}" for m in ids]
    fileobj.write(",".join(header) + "\n")
    for i in range(len(result.t)):
        row = [f"{result.t[i]:.6f}", f"{result.f_coi[i]:.9f}"]
        row += [f"{v:.9f}" for v in result.f[i]]
        row += [f"{v:.9f}" for v in result.delta[i]]
        fileobj.write(",".join(row) + "\n")

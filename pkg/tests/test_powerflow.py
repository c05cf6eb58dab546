from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import fsolve

import netgen
from gridsentry.contingency import Contingency, apply_contingency
from gridsentry.errors import (
    IslandError,
    NotConvergedError,
    SingularJacobianError,
)
from gridsentry.powerflow import solve, solve_strict


def two_bus_closed_form(load_mw: float, x: float, base: float = 100.0):
    """Exact solution of the lossless two-bus case.

    With v1 = 1 and a P-only load, the receiving-end equations reduce to
    v2 = cos(a2) and base*sin(2*a2)/(2*x) = -load.
    """
    a2 = 0.5 * math.asin(-2.0 * x * load_mw / base)
    return a2, math.cos(a2)


class TestTwoBusOracle:
    def test_matches_closed_form(self, two_bus):
        res = solve(two_bus)
        assert res.converged
        a2, v2 = two_bus_closed_form(100.0, 0.1)
        assert res.bus_v_ang("B2") == pytest.approx(a2, abs=1e-9)
        assert res.bus_v_mag("B2") == pytest.approx(v2, abs=1e-9)
        assert res.bus_v_ang("B1") == 0.0
        assert res.bus_v_mag("B1") == 1.0

    def test_slack_covers_load_exactly_when_lossless(self, two_bus):
        res = solve(two_bus)
        assert res.machine_p_mw["G1"] == pytest.approx(100.0, abs=1e-6)

    def test_flow_oracle(self, two_bus):
        res = solve(two_bus)
        a2, v2 = two_bus_closed_form(100.0, 0.1)
        v1c, v2c = 1.0 + 0j, cmath.rect(v2, a2)
        s_f = v1c * ((v1c - v2c) / 0.1j).conjugate() * 100.0
        fl = res.branch_flows["L1"]
        assert fl.p_from_mw == pytest.approx(s_f.real, abs=1e-6)
        assert fl.q_from_mvar == pytest.approx(s_f.imag, abs=1e-6)
        assert fl.p_to_mw == pytest.approx(-100.0, abs=1e-6)

    def test_loading_percentage_arithmetic(self):
        doc = netgen.two_bus()
        doc["branches"][0]["mva_rating"] = 120.0
        res = solve(netgen.parse(doc))
        fl = res.branch_flows["L1"]
        expect = 100.0 * max(
            math.hypot(fl.p_from_mw, fl.q_from_mvar),
            math.hypot(fl.p_to_mw, fl.q_to_mvar),
        ) / 120.0
        assert fl.loading_pct == pytest.approx(expect, abs=1e-9)


def _three_bus_reference():
    """Scalar-equation solution of the meshed 3-bus case, written from
    the textbook bus power formulas with its own admittance assembly."""
    lines = [  # from, to, r, x, b
        (0, 1, 0.01, 0.06, 0.03),
        (0, 2, 0.02, 0.08, 0.02),
        (1, 2, 0.0125, 0.05, 0.02),
    ]
    G = np.zeros((3, 3))
    B = np.zeros((3, 3))
    for f, t, r, x, b in lines:
        g, bb = r / (r * r + x * x), -x / (r * r + x * x)
        G[f, f] += g
        G[t, t] += g
        B[f, f] += bb + b / 2
        B[t, t] += bb + b / 2
        G[f, t] -= g
        G[t, f] -= g
        B[f, t] -= bb
        B[t, f] -= bb

    def p_at(i, vm, va):
        return vm[i] * sum(
            vm[k] * (G[i, k] * math.cos(va[i] - va[k])
                     + B[i, k] * math.sin(va[i] - va[k]))
            for k in range(3)
        )

    def q_at(i, vm, va):
        return vm[i] * sum(
            vm[k] * (G[i, k] * math.sin(va[i] - va[k])
                     - B[i, k] * math.cos(va[i] - va[k]))
            for k in range(3)
        )

    def equations(z):
        a2, a3, v3 = z
        vm = [1.0, 1.02, v3]
        va = [0.0, a2, a3]
        return [
            p_at(1, vm, va) - 0.6,
            p_at(2, vm, va) + 1.3,
            q_at(2, vm, va) + 0.4,
        ]

    z = fsolve(equations, [0.0, 0.0, 1.0], full_output=False, xtol=1e-12)
    a2, a3, v3 = z
    return {"a2": a2, "a3": a3, "v3": v3}


class TestThreeBus:
    def test_matches_independent_scalar_solution(self, three_bus):
        ref = _three_bus_reference()
        res = solve(three_bus)
        assert res.converged
        assert res.bus_v_ang("B2") == pytest.approx(ref["a2"], abs=1e-8)
        assert res.bus_v_ang("B3") == pytest.approx(ref["a3"], abs=1e-8)
        assert res.bus_v_mag("B3") == pytest.approx(ref["v3"], abs=1e-8)
        assert res.bus_v_mag("B2") == 1.02

    def test_generation_covers_load_plus_losses(self, three_bus):
        res = solve(three_bus)
        total_gen = sum(res.machine_p_mw.values())
        loss = sum(
            fl.p_from_mw + fl.p_to_mw for fl in res.branch_flows.values()
        )
        assert loss > 0
        assert total_gen == pytest.approx(130.0 + loss, abs=1e-6)

    def test_branch_loss_nonnegative(self, three_bus):
        res = solve(three_bus)
        for fl in res.branch_flows.values():
            assert fl.p_from_mw + fl.p_to_mw >= -1e-9

    def test_warm_start_converges_quickly(self, three_bus):
        first = solve(three_bus)
        assert first.iterations <= 6


class TestBusTypeHandling:
    def test_pv_bus_holds_setpoint(self, three_bus):
        res = solve(three_bus)
        assert res.bus_v_mag("B2") == pytest.approx(1.02)

    def test_pv_without_machine_becomes_pq(self, three_bus):
        tripped = apply_contingency(
            three_bus, Contingency("gen_trip", ("G2",))
        )
        res = solve(tripped)
        assert res.converged
        assert abs(res.bus_v_mag("B2") - 1.02) > 1e-4

    def test_slack_machines_share_by_rating(self):
        doc = netgen.two_bus()
        doc["machines"].append(
            netgen.machine("G1b", "B1", p_set=0.0, s_rated=100.0)
        )
        res = solve(netgen.parse(doc))
        assert res.machine_p_mw["G1"] == pytest.approx(75.0, abs=1e-6)
        assert res.machine_p_mw["G1b"] == pytest.approx(25.0, abs=1e-6)


class TestIslands:
    def test_line_trip_dead_island(self, two_bus):
        split = apply_contingency(two_bus, Contingency("line_trip", ("L1",)))
        res = solve(split)
        assert res.converged
        assert "B2" in res.dead_buses
        assert res.bus_v_mag("B2") == 0.0
        assert res.islands == (("B1",),)
        assert res.machine_p_mw["G1"] == pytest.approx(0.0, abs=1e-9)
        assert any("de-energized" in n for n in res.notes)

    def test_slackless_island_raises_without_promotion(self):
        doc = netgen.two_bus()
        doc["machines"].append(
            netgen.machine("G2", "B2", p_set=20.0, s_rated=50.0)
        )
        snap = netgen.parse(doc)
        split = apply_contingency(snap, Contingency("line_trip", ("L1",)))
        with pytest.raises(IslandError):
            solve(split)

    def test_promoted_slack_balances_island(self):
        doc = netgen.two_bus()
        doc["machines"].append(
            netgen.machine("G2", "B2", p_set=20.0, s_rated=50.0)
        )
        snap = netgen.parse(doc)
        split = apply_contingency(snap, Contingency("line_trip", ("L1",)))
        res = solve(split, promote_slack=True)
        assert res.converged
        assert res.machine_p_mw["G2"] == pytest.approx(100.0, abs=1e-9)
        assert len(res.islands) == 2
        assert any("promoted" in n for n in res.notes)


class TestFailureModes:
    def test_overload_beyond_transfer_limit_reports_not_raises(self):
        doc = netgen.two_bus(load_mw=600.0)  # limit is 500 MW at x=0.1
        doc["machines"][0]["p_max"] = 1000.0
        res = solve(netgen.parse(doc))
        assert not res.converged
        with pytest.raises(NotConvergedError):
            solve_strict(netgen.parse(doc))

    def test_singular_jacobian_detected_at_start(self):
        doc = netgen.two_bus()
        doc["branches"].append(
            netgen.branch("L1neg", "B1", "B2", r=0.0, x=-0.1)
        )
        with pytest.raises(SingularJacobianError):
            solve(netgen.parse(doc))


@settings(max_examples=40, deadline=None)
@given(load_mw=st.floats(1.0, 350.0), x=st.floats(0.02, 0.12))
def test_two_bus_family_matches_closed_form(load_mw, x):
    doc = netgen.two_bus(load_mw=load_mw, x=x)
    doc["machines"][0]["p_max"] = 1000.0
    res = solve(netgen.parse(doc))
    if 2.0 * x * load_mw / 100.0 >= 0.999:  # at the nose, NR may fail
        return
    assert res.converged
    a2, v2 = two_bus_closed_form(load_mw, x)
    assert res.bus_v_ang("B2") == pytest.approx(a2, abs=1e-7)
    assert res.bus_v_mag("B2") == pytest.approx(v2, abs=1e-7)
    assert res.machine_p_mw["G1"] == pytest.approx(load_mw, abs=1e-5)


@settings(max_examples=30, deadline=None)
@given(p3=st.floats(10.0, 200.0), q3=st.floats(-50.0, 80.0))
def test_three_bus_family_balances(p3, q3):
    doc = netgen.three_bus()
    doc["loads"][0]["p"] = p3
    doc["loads"][0]["q"] = q3
    res = solve(netgen.parse(doc))
    assert res.converged
    total_gen = sum(res.machine_p_mw.values())
    loss = sum(fl.p_from_mw + fl.p_to_mw for fl in res.branch_flows.values())
    assert total_gen == pytest.approx(p3 + loss, abs=1e-5)

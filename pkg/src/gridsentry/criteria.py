"""Security criteria: windowed RoCoF, nadir/zenith, rotor-angle margin,
quasi-steady-state voltage, and case classification.

Flags carried on a classified case: RoCoF+, RoCoF-, Nadir, Zenith,
RotorAngle, Voltage. All comparisons against limits are strict; a value
exactly on its limit is secure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyTraceError,
    SingleMachineError,
    TraceTooShortError,
    ValidationError,
)
from .powerflow import PowerFlowResult

FLAGS = ("RoCoF+", "RoCoF-", "Nadir", "Zenith", "RotorAngle", "Voltage")


@dataclass(frozen=True)
class SecurityLimits:
    rocof_limit: float = 0.9  # Hz/s, symmetric
    nadir_limit: float = 49.0  # Hz
    zenith_limit: float = 50.8  # Hz
    rocof_window: float = 0.5  # s
    blanking: float = 0.1  # s after the event
    angle_threshold: float = 180.0  # degrees
    v_min_pu: float = 0.90
    v_max_pu: float = 1.10
    thermal_pct: float = 100.0

    def validate(self) -> None:
        if self.rocof_limit <= 0:
            raise ValidationError("rocof_limit must be positive")
        if self.rocof_window <= 0:
            raise ValidationError("rocof_window must be positive")
        if self.blanking < 0:
            raise ValidationError("blanking must be >= 0")
        if not self.nadir_limit < self.zenith_limit:
            raise ValidationError("nadir_limit must lie below zenith_limit")
        if self.angle_threshold <= 0:
            raise ValidationError("angle_threshold must be positive")
        if not 0 < self.v_min_pu < self.v_max_pu:
            raise ValidationError("voltage range must satisfy 0 < min < max")


@dataclass(frozen=True)
class SecurityMetrics:
    rocof_max: float  # most positive windowed slope, Hz/s
    rocof_min: float  # most negative
    nadir: float
    zenith: float
    angle_margin: float | None  # None when not applicable
    voltage_secure: bool
    binding: frozenset[str] = frozenset()

    @property
    def insecure(self) -> bool:
        return bool(self.binding)


def rocof(
    trace: np.ndarray,
    dt: float,
    window: float,
    blanking: float,
    event_time: float,
) -> tuple[float, float]:
    """Extreme rolling-window slopes of a uniformly sampled trace.

    s(t) = (f(t) - f(t - window)) / window, evaluated at every sample
    with t >= event_time + blanking and t - window >= 0. Slopes whose
    left endpoint falls inside [event_time, event_time + blanking) are
    discarded: the blanking interval holds the event discontinuity and
    its fast transients, and windows anchored there would alias them.
    """
    n = len(trace)
    k = max(1, int(math.floor(window / dt + 0.5)))
    if n <= k:
        raise TraceTooShortError(
            f"trace spans {(n - 1) * dt:.3f}s, window needs {k * dt:.3f}s"
        )
    # work in sample indices; repeated float multiples of dt drift
    slop = 1e-9
    j0 = max(0, int(math.ceil(event_time / dt - slop)))
    j1 = max(0, int(math.ceil((event_time + blanking) / dt - slop)))
    right = np.arange(k, n)
    left = right - k
    ok = right >= max(j1, k)
    ok &= ~((left >= j0) & (left < j1))
    if not np.any(ok):
        raise TraceTooShortError(
            "no admissible window positions after blanking"
        )
    slopes = (trace[k:] - trace[:-k]) / (k * dt)
    sel = slopes[ok]
    return float(np.max(sel)), float(np.min(sel))


def nadir_zenith(
    trace: np.ndarray, dt: float, event_time: float = 0.0
) -> tuple[float, float]:
    """Lowest and highest frequency reached from the event onward."""
    if len(trace) == 0:
        raise EmptyTraceError("empty frequency trace")
    start = min(int(math.ceil(event_time / dt - 1e-9)), len(trace) - 1)
    post = trace[start:]
    return float(np.min(post)), float(np.max(post))


def angle_margin(
    delta: np.ndarray,
    machine_cols: list[int],
    dt: float,
    event_time: float,
    threshold_deg: float,
) -> float:
    """Stability margin from the largest post-event pairwise angle gap.

    margin = (threshold - gap_max)/(threshold + gap_max), in (-1, 1];
    negative once any pair separates beyond the threshold.
    """
    if len(machine_cols) < 2:
        raise SingleMachineError(
            "angle margin needs at least two machines in the island"
        )
    # strictly post-event: the separation builds after the disturbance
    start = min(
        int(math.floor(event_time / dt + 1e-9)) + 1, delta.shape[0] - 1
    )
    d = delta[start:, machine_cols]
    gap = float(np.max(np.max(d, axis=1) - np.min(d, axis=1)))
    gap_deg = math.degrees(gap)
    return (threshold_deg - gap_deg) / (threshold_deg + gap_deg)


def voltage_assessment(
    pf: PowerFlowResult, limits: SecurityLimits
) -> tuple[bool, list[str]]:
    """Quasi-steady-state check: energized bus voltages inside the Grid
    Code band and branch loadings at or below the thermal limit.

    Returns (secure, findings). A non-converged flow is insecure by
    definition: there is no credible post-event operating point.
    """
    findings: list[str] = []
    if not pf.converged:
        return False, ["power flow did not converge"]
    for i, bus_id in enumerate(pf.bus_ids):
        if bus_id in pf.dead_buses:
            findings.append(f"bus {bus_id} de-energized")
            continue
        v = float(pf.v_mag[i])
        if v < limits.v_min_pu or v > limits.v_max_pu:
            findings.append(f"bus {bus_id} at {v:.4f} pu")
    for br_id, fl in sorted(pf.branch_flows.items()):
        if fl.loading_pct > limits.thermal_pct:
            findings.append(f"branch {br_id} at {fl.loading_pct:.1f}%")
    return not findings, findings


def classify(
    rocof_max: float,
    rocof_min: float,
    nadir: float,
    zenith: float,
    angle_margin: float | None,
    voltage_secure: bool,
    limits: SecurityLimits,
) -> SecurityMetrics:
    """Bind flags per the limit table; strict inequalities throughout."""
    binding = set()
    if rocof_max > limits.rocof_limit:
        binding.add("RoCoF+")
    if rocof_min < -limits.rocof_limit:
        binding.add("RoCoF-")
    if nadir < limits.nadir_limit:
        binding.add("Nadir")
    if zenith > limits.zenith_limit:
        binding.add("Zenith")
    if angle_margin is not None and angle_margin < 0:
        binding.add("RotorAngle")
    if not voltage_secure:
        binding.add("Voltage")
    return SecurityMetrics(
        rocof_max=rocof_max,
        rocof_min=rocof_min,
        nadir=nadir,
        zenith=zenith,
        angle_margin=angle_margin,
        voltage_secure=voltage_secure,
        binding=frozenset(binding),
    )


def assess_case(sim_result, pf: PowerFlowResult,
                limits: SecurityLimits) -> SecurityMetrics:
    """Full per-case assessment from a simulation and the post-event flow.

    Frequency metrics are evaluated island by island on each island's
    inertia-weighted trace; the worst island represents the case (widest
    RoCoF, lowest nadir, highest zenith, smallest angle margin).
    """
    res = sim_result
    r_max, r_min = -np.inf, np.inf
    nad, zen = np.inf, -np.inf
    margin: float | None = None
    ids = list(res.machine_ids)
    for group in res.islands:
        cols = [ids.index(m) for m in group]
        hs = res.hs[cols]
        trace = res.f[:, cols] @ (hs / np.sum(hs))
        g_max, g_min = rocof(
            trace, res.dt, limits.rocof_window, limits.blanking, res.event_t
        )
        g_nad, g_zen = nadir_zenith(trace, res.dt, res.event_t)
        r_max = max(r_max, g_max)
        r_min = min(r_min, g_min)
        nad = min(nad, g_nad)
        zen = max(zen, g_zen)
        if len(cols) >= 2:
            m = angle_margin(
                res.delta, cols, res.dt, res.event_t, limits.angle_threshold
            )
            margin = m if margin is None else min(margin, m)
    v_ok, _ = voltage_assessment(pf, limits)
    return classify(r_max, r_min, nad, zen, margin, v_ok, limits)

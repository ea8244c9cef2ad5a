"""Steady-state model of the HV/MV substation.

One OLTC transformer feeding a lumped voltage-dependent load with a
single-breaker shunt capacitor on the secondary bus, operated radially.
The secondary voltage solves the classic approximate-drop fixed point

    v2 = v2_noload - (R * P(v2) + X * Q_thru(v2)) / v2

with R and X the series impedance referred to the secondary base, in
units arranged so P in MW, Q in MVAr and v2 in kV give the drop in kV.
HV-side metering optionally adds the series losses so the measured
reactive flow includes the transformer's own consumption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MAX_ITERATIONS = 100
V2_TOLERANCE_KV = 1e-6
V2_FLOOR_KV = 10.0
V2_CEIL_KV = 30.0


class SolverError(RuntimeError):
    """Fixed point failed to converge or left the plausible voltage band."""

    def __init__(self, message: str, last_v2: float, iterations: int):
        super().__init__(message)
        self.last_v2 = last_v2
        self.iterations = iterations


@dataclass(frozen=True)
class TransformerParams:
    s_rated_mva: float = 50.0
    v1_nom_kv: float = 66.0
    v2_nom_kv: float = 21.0  # no-load secondary voltage at tap 0
    tap_min: int = -6
    tap_max: int = 15
    tap_step_pu: float = 0.0146
    r_pu: float = 0.005
    x_pu: float = 0.12

    def __post_init__(self):
        if not self.tap_min < 0 < self.tap_max:
            raise ValueError("tap range must straddle zero")
        if not 0.0 < self.tap_step_pu < 0.05:
            raise ValueError("tap step must be in (0, 0.05) per unit")
        if self.r_pu < 0.0 or self.x_pu <= 0.0:
            raise ValueError("need r_pu >= 0 and x_pu > 0")

    @property
    def r_drop(self) -> float:
        """Series resistance in kV per (MW / kV)."""
        return self.r_pu * self.v2_nom_kv**2 / self.s_rated_mva

    @property
    def x_drop(self) -> float:
        """Series reactance in kV per (MVAr / kV)."""
        return self.x_pu * self.v2_nom_kv**2 / self.s_rated_mva


@dataclass(frozen=True)
class CapacitorBank:
    """All-or-nothing shunt bank behind a single breaker."""

    q_rated_mvar: float = 4.2
    v_rated_kv: float = 21.0
    connected: bool = False

    def __post_init__(self):
        if self.q_rated_mvar <= 0.0:
            raise ValueError("capacitor rating must be positive")

    def injection_mvar(self, v2_kv: float) -> float:
        if not self.connected:
            return 0.0
        return self.q_rated_mvar * (v2_kv / self.v_rated_kv) ** 2


@dataclass(frozen=True)
class ZipLoad:
    """Constant-impedance / constant-current / constant-power mix.

    ``p0``/``q0`` are the demands at reference voltage ``v0``; the two
    fraction triples must each sum to one.
    """

    p0_mw: float
    q0_mvar: float
    v0_kv: float = 21.0
    z_p: float = 0.0
    i_p: float = 0.0
    p_p: float = 1.0
    z_q: float = 0.0
    i_q: float = 0.0
    p_q: float = 1.0

    def __post_init__(self):
        if self.p0_mw < 0.0:
            raise ValueError("active power demand must be non-negative")
        if self.v0_kv <= 0.0:
            raise ValueError("reference voltage must be positive")
        for label, total in (
            ("active", self.z_p + self.i_p + self.p_p),
            ("reactive", self.z_q + self.i_q + self.p_q),
        ):
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"{label} ZIP fractions sum to {total}, not 1")


@dataclass(frozen=True)
class OperatingPoint:
    v1_kv: float
    v2_kv: float
    tap: int
    cap_connected: bool
    p_load_mw: float
    q_load_mvar: float
    q_cap_mvar: float
    p_hv_mw: float
    q_hv_mvar: float
    pf: float
    leading: bool
    iterations: int


def no_load_voltage(t: TransformerParams, v1_kv: float, tap: int) -> float:
    """Open-circuit secondary voltage at the given tap position."""
    if not t.tap_min <= tap <= t.tap_max:
        raise ValueError(f"tap {tap} outside [{t.tap_min}, {t.tap_max}]")
    return v1_kv / t.v1_nom_kv * t.v2_nom_kv * (1.0 + t.tap_step_pu * tap)


def load_at_voltage(load: ZipLoad, v2_kv: float) -> tuple[float, float]:
    """ZIP demand (P, Q) at the given bus voltage."""
    if v2_kv <= 0.0:
        raise ValueError("bus voltage must be positive")
    r = v2_kv / load.v0_kv
    p = load.p0_mw * (load.z_p * r * r + load.i_p * r + load.p_p)
    q = load.q0_mvar * (load.z_q * r * r + load.i_q * r + load.p_q)
    return p, q


def solve_operating_point(
    t: TransformerParams,
    cap: CapacitorBank,
    load: ZipLoad,
    v1_kv: float,
    tap: int,
    hv_metering_includes_losses: bool = True,
) -> OperatingPoint:
    """Solve the secondary-bus fixed point and derive HV-side metering.

    Raises :class:`SolverError` (carrying the last iterate) when the
    iteration does not converge within 100 rounds or leaves [10, 30] kV,
    which signals an infeasible load level.
    """
    if not 0.5 * t.v1_nom_kv < v1_kv < 1.5 * t.v1_nom_kv:
        raise ValueError(f"primary voltage {v1_kv} kV is implausible")
    v20 = no_load_voltage(t, v1_kv, tap)
    r_eq = t.r_drop
    x_eq = t.x_drop

    v2 = v20
    iterations = 0
    converged = False
    for iterations in range(1, MAX_ITERATIONS + 1):
        p, q = load_at_voltage(load, v2)
        q_thru = q - cap.injection_mvar(v2)
        v_next = v20 - (r_eq * p + x_eq * q_thru) / v2
        if v_next <= 0.0:
            raise SolverError("voltage collapsed below zero", v_next, iterations)
        if abs(v_next - v2) < V2_TOLERANCE_KV:
            v2 = v_next
            converged = True
            break
        v2 = v_next
    if not converged:
        raise SolverError(
            f"no fixed point in {MAX_ITERATIONS} iterations", v2, iterations
        )
    if not V2_FLOOR_KV <= v2 <= V2_CEIL_KV:
        raise SolverError(
            f"solution {v2:.3f} kV outside [{V2_FLOOR_KV}, {V2_CEIL_KV}] kV",
            v2,
            iterations,
        )

    p, q = load_at_voltage(load, v2)
    q_cap = cap.injection_mvar(v2)
    q_thru = q - q_cap
    if hv_metering_includes_losses:
        flow_sq = (p * p + q_thru * q_thru) / (v2 * v2)
        p_hv = p + r_eq * flow_sq
        q_hv = q_thru + x_eq * flow_sq
    else:
        p_hv = p
        q_hv = q_thru
    if p_hv > 0.0:
        pf = p_hv / math.hypot(p_hv, q_hv)
    else:
        pf = 1.0
    return OperatingPoint(
        v1_kv=v1_kv,
        v2_kv=v2,
        tap=tap,
        cap_connected=cap.connected,
        p_load_mw=p,
        q_load_mvar=q,
        q_cap_mvar=q_cap,
        p_hv_mw=p_hv,
        q_hv_mvar=q_hv,
        pf=pf,
        leading=q_hv < 0.0,
        iterations=iterations,
    )


@dataclass(frozen=True)
class ApplyResult:
    tap: int
    cap_connected: bool
    tap_clamped: bool


def apply_action(
    tap: int, cap_connected: bool, tap_delta: int, cap_command: str,
    t: TransformerParams,
) -> ApplyResult:
    """Advance the actuator state; saturating moves clamp and report it."""
    raw = tap + tap_delta
    new_tap = min(max(raw, t.tap_min), t.tap_max)
    if cap_command == "connect":
        new_cap = True
    elif cap_command == "disconnect":
        new_cap = False
    else:
        new_cap = cap_connected
    return ApplyResult(new_tap, new_cap, new_tap != raw)

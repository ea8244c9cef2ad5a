"""Supervisory control: discretization, switching discipline, baseline.

Two decision makers share one actuation contract:

* :func:`fis_decide` turns the fuzzy engine's crisp outputs into a
  discrete tap step and a breaker command.
* :func:`baseline_decide` exhaustively scores every reachable
  (tap, capacitor) state with a plain cost function and steps toward
  the best one.  It stands in for a conventional optimizing automatism
  and is labeled "baseline" everywhere.

Whatever decided, :func:`enforce_limits` applies the switching
discipline -- persistence, dwell times, and daily budgets -- that keeps
the hardware alive no matter how noisy the telemetry gets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from .fuzzy import FisDefinition, infer
from .plant import CapacitorBank, SolverError, TransformerParams, ZipLoad, solve_operating_point
from .scada import Measurement

HOLD = "hold"
CONNECT = "connect"
DISCONNECT = "disconnect"

TAP_OUTPUT = "Tap"
CAP_OUTPUT = "Capacitor"
MAX_TAP_DELTA = 2


class BaselineError(RuntimeError):
    """No candidate state was solvable."""


@dataclass(frozen=True)
class ControlAction:
    tap_delta: int = 0
    cap_command: str = HOLD
    provenance: Optional[dict] = None
    suppressed_by: Tuple[str, ...] = ()
    requested: Optional[Tuple[int, str]] = None  # pre-suppression (tap, cap)

    def is_hold(self) -> bool:
        return self.tap_delta == 0 and self.cap_command == HOLD


@dataclass(frozen=True)
class ControllerLimits:
    max_tap_ops_per_day: int = 30
    max_cap_ops_per_day: int = 6
    tap_dwell_s: float = 60.0
    cap_dwell_s: float = 300.0
    tap_deadzone: float = 0.7
    cap_threshold: float = 0.5
    persistence: int = 3

    def __post_init__(self):
        if min(
            self.max_tap_ops_per_day,
            self.max_cap_ops_per_day,
            self.tap_dwell_s,
            self.cap_dwell_s,
            self.tap_deadzone,
            self.cap_threshold,
        ) <= 0:
            raise ValueError("limits must all be positive")
        if self.persistence < 1:
            raise ValueError("persistence must be at least 1")


@dataclass(frozen=True)
class PeakSchedule:
    """Daily on-peak windows, hours in [0, 24), non-overlapping."""

    windows: Tuple[Tuple[float, float], ...] = ((10.0, 14.0), (18.0, 22.0))

    def __post_init__(self):
        spans = sorted(self.windows)
        for start, end in spans:
            if not (0.0 <= start < end <= 24.0):
                raise ValueError(f"bad on-peak window [{start}, {end})")
        for (_, e1), (s2, _) in zip(spans, spans[1:]):
            if s2 < e1:
                raise ValueError("on-peak windows overlap")

    def is_on_peak(self, t_hours: float) -> bool:
        h = t_hours % 24.0
        return any(start <= h < end for start, end in self.windows)


@dataclass(frozen=True)
class ControllerState:
    """Switching-discipline memory carried across samples."""

    last_tap_op_s: float = -math.inf
    last_cap_op_s: float = -math.inf
    tap_ops_today: int = 0
    cap_ops_today: int = 0
    pending_tap: int = 0
    tap_streak: int = 0
    pending_cap: str = HOLD
    cap_streak: int = 0
    day_anchor: int = 0


def fis_decide(
    fis: FisDefinition,
    m: Measurement,
    t_hours: float,
    schedule: PeakSchedule,
    limits: ControllerLimits,
) -> ControlAction:
    """Infer from the measurement and discretize the crisp outputs.

    The crisp tap output rounds to the nearest step inside +/-2 with a
    dead zone around zero; the capacitor output maps to connect /
    disconnect / hold around symmetric thresholds.  The fired-rule
    report rides along as provenance.
    """
    inputs = {
        "Voltage": m.v2_kv,
        "Reactive_power": m.q_hv_mvar,
        "Tap": float(m.tap),
        "Shunt_Off": 1.0 if m.cap_connected else 0.0,
        "Time": t_hours % 24.0,
        "OnPeak": 1.0 if schedule.is_on_peak(t_hours) else 0.0,
    }
    result = infer(fis, inputs)

    tap_delta = 0
    crisp_tap = result.values.get(TAP_OUTPUT)
    if crisp_tap is not None and abs(crisp_tap) >= limits.tap_deadzone:
        magnitude = int(math.floor(abs(crisp_tap) + 0.5))
        tap_delta = min(magnitude, MAX_TAP_DELTA)
        if crisp_tap < 0.0:
            tap_delta = -tap_delta

    cap_command = HOLD
    crisp_cap = result.values.get(CAP_OUTPUT)
    if crisp_cap is not None:
        if crisp_cap >= limits.cap_threshold:
            cap_command = CONNECT
        elif crisp_cap <= -limits.cap_threshold:
            cap_command = DISCONNECT

    provenance = {
        "crisp": dict(result.values),
        "no_rule_fired": dict(result.no_rule_fired),
        "fired": [(f.index, f.strength) for f in result.fired if f.strength > 0.0],
    }
    return ControlAction(tap_delta, cap_command, provenance)


def enforce_limits(
    action: ControlAction,
    state: ControllerState,
    limits: ControllerLimits,
    t_s: float,
) -> tuple[ControlAction, ControllerState]:
    """Gate a requested action through the switching discipline.

    A non-zero component passes only when the identical request has
    persisted for ``persistence`` consecutive samples, its device's
    dwell time has elapsed, and its daily budget is not spent; the
    suppressed reasons are recorded on the returned action.  Budgets
    reset at midnight rollovers.  Never emits anything the request did
    not ask for this sample.
    """
    day = int(t_s // 86400)
    if day != state.day_anchor:
        state = replace(state, day_anchor=day, tap_ops_today=0, cap_ops_today=0)

    suppressed: list[str] = []

    want_tap = action.tap_delta
    out_tap = 0
    if want_tap != 0:
        streak = state.tap_streak + 1 if want_tap == state.pending_tap else 1
        state = replace(state, pending_tap=want_tap, tap_streak=streak)
        if streak < limits.persistence:
            suppressed.append("tap_persistence")
        elif t_s - state.last_tap_op_s < limits.tap_dwell_s:
            suppressed.append("tap_dwell")
        elif state.tap_ops_today >= limits.max_tap_ops_per_day:
            suppressed.append("tap_daily_budget")
        else:
            out_tap = want_tap
            state = replace(
                state,
                last_tap_op_s=t_s,
                tap_ops_today=state.tap_ops_today + 1,
                pending_tap=0,
                tap_streak=0,
            )
    else:
        state = replace(state, pending_tap=0, tap_streak=0)

    want_cap = action.cap_command
    out_cap = HOLD
    if want_cap != HOLD:
        streak = state.cap_streak + 1 if want_cap == state.pending_cap else 1
        state = replace(state, pending_cap=want_cap, cap_streak=streak)
        if streak < limits.persistence:
            suppressed.append("cap_persistence")
        elif t_s - state.last_cap_op_s < limits.cap_dwell_s:
            suppressed.append("cap_dwell")
        elif state.cap_ops_today >= limits.max_cap_ops_per_day:
            suppressed.append("cap_daily_budget")
        else:
            out_cap = want_cap
            state = replace(
                state,
                last_cap_op_s=t_s,
                cap_ops_today=state.cap_ops_today + 1,
                pending_cap=HOLD,
                cap_streak=0,
            )
    else:
        state = replace(state, pending_cap=HOLD, cap_streak=0)

    gated = replace(
        action,
        tap_delta=out_tap,
        cap_command=out_cap,
        suppressed_by=tuple(suppressed),
        requested=(want_tap, want_cap) if suppressed else None,
    )
    return gated, state


@dataclass(frozen=True)
class BaselineWeights:
    """Cost weights for the exhaustive comparator."""

    w_v: float = 1.0  # per kV of voltage error
    w_q: float = 10.0  # per unit of power-factor shortfall
    w_s: float = 0.05  # per device operation
    v_target_kv: float = 21.0
    pf_target: float = 0.98


def baseline_cost(
    op_v2_kv: float,
    op_pf: float,
    tap: int,
    cap_on: bool,
    tap_now: int,
    cap_now: bool,
    w: BaselineWeights,
) -> float:
    switches = abs(tap - tap_now) + (1 if cap_on != cap_now else 0)
    return (
        w.w_v * abs(op_v2_kv - w.v_target_kv)
        + w.w_q * max(0.0, w.pf_target - op_pf)
        + w.w_s * switches
    )


def baseline_decide(
    t: TransformerParams,
    cap: CapacitorBank,
    load: ZipLoad,
    v1_kv: float,
    tap_now: int,
    cap_now: bool,
    weights: BaselineWeights,
    hv_metering_includes_losses: bool = True,
) -> ControlAction:
    """Score every (tap, capacitor) candidate and step toward the best.

    All tap positions times both breaker states are solved; cost ties
    break toward fewer device operations, then the lower tap.  The
    emitted move is the first step: tap clamped to +/-2 per decision,
    breaker command issued directly.
    """
    best = None
    for tap_c in range(t.tap_min, t.tap_max + 1):
        for cap_on in (False, True):
            try:
                op = solve_operating_point(
                    t,
                    replace(cap, connected=cap_on),
                    load,
                    v1_kv,
                    tap_c,
                    hv_metering_includes_losses,
                )
            except SolverError:
                continue
            cost = baseline_cost(
                op.v2_kv, op.pf, tap_c, cap_on, tap_now, cap_now, weights
            )
            switches = abs(tap_c - tap_now) + (1 if cap_on != cap_now else 0)
            key = (cost, switches, tap_c)
            if best is None or key < best[0]:
                best = (key, tap_c, cap_on, op)
    if best is None:
        raise BaselineError("no solvable candidate state")

    _, tap_best, cap_best, op_best = best
    delta = max(-MAX_TAP_DELTA, min(MAX_TAP_DELTA, tap_best - tap_now))
    if cap_best and not cap_now:
        cap_command = CONNECT
    elif not cap_best and cap_now:
        cap_command = DISCONNECT
    else:
        cap_command = HOLD
    provenance = {
        "cost": best[0][0],
        "target_tap": tap_best,
        "target_cap": cap_best,
        "v2_kv": op_best.v2_kv,
        "pf": op_best.pf,
    }
    return ControlAction(delta, cap_command, provenance)

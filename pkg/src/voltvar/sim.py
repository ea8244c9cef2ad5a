"""Closed-loop scenario driver and run-log I/O.

One loop iteration per SCADA refresh: interpolate the demand, solve the
plant, quantize the measurement, let the selected controller decide,
gate the decision through the switching discipline, and log.  Actions
take effect on the next step -- telemetry first, command after, as in a
real dispatch cycle.  Given a config and seed the whole run is
bit-reproducible, and the log CSV uses fixed float formats so repeat
runs are byte-identical.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

from .config import (
    ScenarioConfig,
    interpolate_profile,
    load_fis_with_rules,
    make_zip_load,
)
from .control import (
    ControlAction,
    ControllerState,
    HOLD,
    baseline_decide,
    enforce_limits,
    fis_decide,
)
from .fuzzy import validate_fis
from .metrics import SeriesSample, SummaryStats, summarize
from .plant import SolverError, apply_action, solve_operating_point
from .ruledsl import lint
from .scada import quantize

RUNLOG_HEADER = [
    "time_s",
    "v1_kv",
    "v2_true_kv",
    "v2_meas_kv",
    "p_mw",
    "q_hv_mvar",
    "pf",
    "leading",
    "tap",
    "cap",
    "action_tap",
    "action_cap",
    "suppressed_by",
]


class ScenarioError(RuntimeError):
    """The simulation could not run to completion."""


@dataclass(frozen=True)
class RunRecord:
    time_s: float
    v1_kv: float
    v2_true_kv: float
    v2_meas_kv: float
    p_mw: float
    q_hv_mvar: float
    pf: float
    leading: bool
    tap: int
    cap: bool
    action_tap: int
    action_cap: str
    suppressed_by: str


def _fis_controller(cfg: ScenarioConfig) -> Callable:
    fis, parse_diags = load_fis_with_rules(cfg.fis_path, cfg.rules_path)
    problems = [d for d in parse_diags if d.is_error()]
    problems += [d for d in validate_fis(fis) if d.is_error()]
    problems += [d for d in lint(list(fis.rules), fis) if d.is_error()]
    if problems:
        details = "; ".join(d.message for d in problems)
        raise ScenarioError(f"FIS configuration is invalid: {details}")

    def decide(measurement, t_s: float) -> ControlAction:
        return fis_decide(
            fis, measurement, (t_s % 86400.0) / 3600.0, cfg.schedule, cfg.limits
        )

    return decide


def _baseline_controller(cfg: ScenarioConfig) -> Callable:
    def decide(measurement, t_s: float) -> ControlAction:
        p0, q0 = interpolate_profile(cfg.profile, t_s)
        return baseline_decide(
            cfg.transformer,
            cfg.capacitor,
            make_zip_load(cfg, p0, q0),
            cfg.v1_at(t_s),
            measurement.tap,
            measurement.cap_connected,
            cfg.baseline,
            cfg.hv_metering_includes_losses,
        )

    return decide


def run_scenario(cfg: ScenarioConfig) -> tuple[list[RunRecord], SummaryStats]:
    """Run the configured scenario and summarize its measured series."""
    if cfg.controller_mode == "fis":
        decide = _fis_controller(cfg)
    elif cfg.controller_mode == "baseline":
        decide = _baseline_controller(cfg)
    else:
        decide = lambda measurement, t_s: ControlAction()  # noqa: E731

    rng = cfg.noise.make_rng() if cfg.noise.enabled else None
    state = ControllerState(day_anchor=0)
    tap = cfg.initial_tap
    cap = cfg.capacitor

    records: list[RunRecord] = []
    for k in range(cfg.steps() + 1):
        t_s = k * cfg.step_s
        p0, q0 = interpolate_profile(cfg.profile, t_s)
        load = make_zip_load(cfg, p0, q0)
        try:
            op = solve_operating_point(
                cfg.transformer,
                cap,
                load,
                cfg.v1_at(t_s),
                tap,
                cfg.hv_metering_includes_losses,
            )
        except (SolverError, ValueError) as exc:
            raise ScenarioError(f"plant solve failed at t={t_s:.0f}s: {exc}") from exc

        measurement = quantize(cfg.quantization, op, t_s, cfg.noise, rng)
        requested = decide(measurement, t_s)
        action, state = enforce_limits(requested, state, cfg.limits, t_s)

        records.append(
            RunRecord(
                time_s=t_s,
                v1_kv=op.v1_kv,
                v2_true_kv=op.v2_kv,
                v2_meas_kv=measurement.v2_kv,
                p_mw=measurement.p_mw,
                q_hv_mvar=measurement.q_hv_mvar,
                pf=measurement.pf,
                leading=measurement.leading,
                tap=tap,
                cap=cap.connected,
                action_tap=action.tap_delta,
                action_cap=action.cap_command,
                suppressed_by=";".join(action.suppressed_by),
            )
        )

        applied = apply_action(
            tap, cap.connected, action.tap_delta, action.cap_command, cfg.transformer
        )
        tap = applied.tap
        if applied.cap_connected != cap.connected:
            cap = replace(cap, connected=applied.cap_connected)

    return records, summarize(records_to_series(records))


def records_to_series(records: list[RunRecord]) -> list[SeriesSample]:
    """Measured channels of a run log as a metric series."""
    return [
        SeriesSample(
            time_s=r.time_s,
            v2_kv=r.v2_meas_kv,
            pf=r.pf,
            leading=r.leading,
            tap=r.tap,
            cap_connected=r.cap,
        )
        for r in records
    ]


def write_runlog(path: Path | str, records: list[RunRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RUNLOG_HEADER)
        for r in records:
            writer.writerow(
                [
                    f"{r.time_s:.0f}",
                    f"{r.v1_kv:.4f}",
                    f"{r.v2_true_kv:.4f}",
                    f"{r.v2_meas_kv:.4f}",
                    f"{r.p_mw:.3f}",
                    f"{r.q_hv_mvar:.3f}",
                    f"{r.pf:.6f}",
                    "1" if r.leading else "0",
                    str(r.tap),
                    "1" if r.cap else "0",
                    str(r.action_tap),
                    r.action_cap,
                    r.suppressed_by,
                ]
            )


def read_runlog(path: Path | str) -> list[RunRecord]:
    records: list[RunRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RUNLOG_HEADER:
            raise ScenarioError(f"{path}: not a run log (header {header})")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RUNLOG_HEADER):
                raise ScenarioError(f"{path}:{lineno}: expected {len(RUNLOG_HEADER)} columns")
            try:
                records.append(
                    RunRecord(
                        time_s=float(row[0]),
                        v1_kv=float(row[1]),
                        v2_true_kv=float(row[2]),
                        v2_meas_kv=float(row[3]),
                        p_mw=float(row[4]),
                        q_hv_mvar=float(row[5]),
                        pf=float(row[6]),
                        leading=row[7] == "1",
                        tap=int(row[8]),
                        cap=row[9] == "1",
                        action_tap=int(row[10]),
                        action_cap=row[11] or HOLD,
                        suppressed_by=row[12],
                    )
                )
            except ValueError as exc:
                raise ScenarioError(f"{path}:{lineno}: {exc}") from exc
    return records


def format_summary(stats: SummaryStats) -> str:
    return "\n".join(stats.lines()) + "\n"


def write_summary(path: Path | str, stats: SummaryStats) -> None:
    Path(path).write_text(format_summary(stats), encoding="utf-8")

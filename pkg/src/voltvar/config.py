"""Scenario and FIS configuration files, plus load-profile ingestion.

Both file kinds are sectioned key/value text (INI syntax, ``#``
comments).  Paths inside a scenario resolve relative to the scenario
file; the ``builtin:`` prefix resolves into the data shipped with the
package, e.g. ``builtin:default.fis``.
"""

from __future__ import annotations

import configparser
import csv
import importlib.resources
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from .control import BaselineWeights, ControllerLimits, PeakSchedule
from .fuzzy import (
    FisDefinition,
    FuzzySet,
    INPUT,
    LinguisticVariable,
    MembershipFunction,
    OUTPUT,
    Rule,
)
from .plant import CapacitorBank, TransformerParams, ZipLoad
from .ruledsl import parse_ruleset
from .scada import NoiseSpec, QuantizationSpec

BUILTIN_PREFIX = "builtin:"
CONTROLLER_MODES = ("fis", "baseline", "none")


class ConfigError(ValueError):
    """A scenario or FIS file failed schema validation."""


def resolve_path(value: str, base_dir: Optional[Path]) -> Path:
    if value.startswith(BUILTIN_PREFIX):
        name = value[len(BUILTIN_PREFIX):]
        return Path(str(importlib.resources.files("voltvar.data") / name))
    p = Path(value)
    if not p.is_absolute() and base_dir is not None:
        p = base_dir / p
    return p


def builtin_fis_path() -> Path:
    return resolve_path(BUILTIN_PREFIX + "default.fis", None)


def builtin_rules_path() -> Path:
    return resolve_path(BUILTIN_PREFIX + "default14.rules", None)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(
        comment_prefixes=("#",), inline_comment_prefixes=("#",), interpolation=None
    )
    cp.optionxform = str  # term and variable names are case sensitive
    return cp


# ---------------------------------------------------------------------------
# FIS definition files


def load_fis(path: Path | str, rules: Tuple[Rule, ...] = ()) -> FisDefinition:
    """Read a FIS definition file; rules are attached separately."""
    path = Path(path)
    cp = _parser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cp.read_file(fh, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read FIS file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed FIS file {path}: {exc}") from exc

    resolution = 1001
    inputs: list[LinguisticVariable] = []
    outputs: list[LinguisticVariable] = []
    for section in cp.sections():
        if section == "fis":
            resolution = _get_int(cp, "fis", "resolution", resolution)
            if resolution < 101:
                raise ConfigError("fis resolution must be >= 101")
            continue
        parts = section.split(None, 1)
        if len(parts) != 2 or parts[0] not in (INPUT, OUTPUT):
            raise ConfigError(
                f"{path}: section [{section}] is not [input NAME] or [output NAME]"
            )
        kind, name = parts
        var = _parse_variable(cp, section, kind, name, path)
        (inputs if kind == INPUT else outputs).append(var)

    if not inputs or not outputs:
        raise ConfigError(f"{path}: need at least one input and one output variable")
    return FisDefinition(tuple(inputs), tuple(outputs), tuple(rules), resolution)


def _parse_variable(
    cp: configparser.ConfigParser, section: str, kind: str, name: str, path: Path
) -> LinguisticVariable:
    unit = cp.get(section, "unit", fallback="")
    universe_raw = cp.get(section, "universe", fallback=None)
    if universe_raw is None:
        raise ConfigError(f"{path}: [{section}] is missing 'universe'")
    bounds = universe_raw.split()
    if len(bounds) != 2:
        raise ConfigError(f"{path}: [{section}] universe needs two numbers")
    lo, hi = (float(b) for b in bounds)

    sets: list[FuzzySet] = []
    for key, raw in cp.items(section):
        if key in ("unit", "universe"):
            continue
        pts = raw.split()
        if len(pts) != 4:
            raise ConfigError(
                f"{path}: [{section}] term '{key}' needs four breakpoints"
            )
        a, b, c, d = (float(p) for p in pts)
        sets.append(FuzzySet(key, MembershipFunction(a, b, c, d)))
    if not sets:
        raise ConfigError(f"{path}: [{section}] declares no terms")
    return LinguisticVariable(name, kind, lo, hi, tuple(sets), unit)


def load_fis_with_rules(fis_path: Path | str, rules_path: Path | str):
    """Convenience loader: FIS file + rule file -> (FisDefinition, diagnostics)."""
    rules_path = Path(rules_path)
    try:
        text = rules_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read rules file {rules_path}: {exc}") from exc
    rules, diagnostics = parse_ruleset(text)
    fis = load_fis(fis_path, tuple(rules))
    return fis, diagnostics


# ---------------------------------------------------------------------------
# Load profiles


@dataclass(frozen=True)
class LoadProfile:
    """Demand breakpoints (time_s, p_mw, q_mvar) at the reference voltage."""

    points: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self):
        if not self.points:
            raise ConfigError("load profile has no breakpoints")
        times = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("load profile times must be strictly increasing")


def load_profile_csv(path: Path | str) -> LoadProfile:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["time_s", "p_mw", "q_mvar"]:
                raise ConfigError(
                    f"{path}: expected header 'time_s,p_mw,q_mvar', got {header}"
                )
            points = []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != 3:
                    raise ConfigError(f"{path}:{lineno}: expected three columns")
                try:
                    points.append((float(row[0]), float(row[1]), float(row[2])))
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read load profile {path}: {exc}") from exc
    return LoadProfile(tuple(points))


def interpolate_profile(profile: LoadProfile, t_s: float) -> tuple[float, float]:
    """Piecewise-linear interpolation with flat extrapolation at the ends."""
    pts = profile.points
    if t_s <= pts[0][0]:
        return pts[0][1], pts[0][2]
    if t_s >= pts[-1][0]:
        return pts[-1][1], pts[-1][2]
    for (t0, p0, q0), (t1, p1, q1) in zip(pts, pts[1:]):
        if t0 <= t_s <= t1:
            w = (t_s - t0) / (t1 - t0)
            return p0 + w * (p1 - p0), q0 + w * (q1 - q0)
    raise AssertionError("unreachable: profile times are ordered")


# ---------------------------------------------------------------------------
# Scenario files


@dataclass(frozen=True)
class ScenarioConfig:
    transformer: TransformerParams
    capacitor: CapacitorBank  # connection flag = initial breaker state
    profile: LoadProfile
    v0_kv: float
    zip_active: Tuple[float, float, float]
    zip_reactive: Tuple[float, float, float]
    v1_kv: float
    v1_profile: Optional[LoadProfile]  # (time_s, v1_kv, 0) rows when present
    controller_mode: str
    fis_path: Path
    rules_path: Path
    initial_tap: int
    limits: ControllerLimits
    schedule: PeakSchedule
    quantization: QuantizationSpec
    noise: NoiseSpec
    baseline: BaselineWeights
    hv_metering_includes_losses: bool
    duration_s: float
    step_s: float
    seed: int
    source_path: Optional[Path] = None

    def steps(self) -> int:
        return int(round(self.duration_s / self.step_s))

    def v1_at(self, t_s: float) -> float:
        if self.v1_profile is None:
            return self.v1_kv
        v1, _ = interpolate_profile(self.v1_profile, t_s)
        return v1


def load_scenario(path: Path | str) -> ScenarioConfig:
    """Parse and validate a scenario file; raises ConfigError on problems."""
    path = Path(path)
    base = path.parent
    cp = _parser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cp.read_file(fh, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario {path}: {exc}") from exc

    try:
        transformer = TransformerParams(
            s_rated_mva=_get_float(cp, "plant", "s_rated_mva", 50.0),
            v1_nom_kv=_get_float(cp, "plant", "v1_nom_kv", 66.0),
            v2_nom_kv=_get_float(cp, "plant", "v2_nom_kv", 21.0),
            tap_min=_get_int(cp, "plant", "tap_min", -6),
            tap_max=_get_int(cp, "plant", "tap_max", 15),
            tap_step_pu=_get_float(cp, "plant", "tap_step_pu", 0.0146),
            r_pu=_get_float(cp, "plant", "r_pu", 0.005),
            x_pu=_get_float(cp, "plant", "x_pu", 0.12),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: bad plant parameters: {exc}") from exc

    initial_cap = _get_bool(cp, "controller", "initial_cap", False, aliases=_ON_OFF)
    try:
        capacitor = CapacitorBank(
            q_rated_mvar=_get_float(cp, "capacitor", "q_rated_mvar", 4.2),
            v_rated_kv=_get_float(cp, "capacitor", "v_rated_kv", 21.0),
            connected=initial_cap,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: bad capacitor parameters: {exc}") from exc

    profile_rel = cp.get("load", "profile_csv", fallback=None)
    if profile_rel is None:
        raise ConfigError(f"{path}: [load] profile_csv is required")
    profile = load_profile_csv(resolve_path(profile_rel, base))
    zip_active = _get_triple(cp, "load", "zip_active", (0.0, 0.0, 1.0), path)
    zip_reactive = _get_triple(cp, "load", "zip_reactive", (0.0, 0.0, 1.0), path)
    v0_kv = _get_float(cp, "load", "v0_kv", 21.0)
    for label, (z, i, p) in (("zip_active", zip_active), ("zip_reactive", zip_reactive)):
        if abs(z + i + p - 1.0) > 1e-9:
            raise ConfigError(f"{path}: {label} fractions must sum to 1")

    v1_kv = _get_float(cp, "source", "v1_kv", 66.0)
    v1_profile = None
    v1_csv = cp.get("source", "v1_csv", fallback=None)
    if v1_csv is not None:
        v1_profile = _load_v1_csv(resolve_path(v1_csv, base))

    mode = cp.get("controller", "mode", fallback="fis").strip().lower()
    if mode not in CONTROLLER_MODES:
        raise ConfigError(f"{path}: controller mode must be one of {CONTROLLER_MODES}")
    fis_path = resolve_path(
        cp.get("controller", "fis_file", fallback=BUILTIN_PREFIX + "default.fis"), base
    )
    rules_path = resolve_path(
        cp.get("controller", "rules_file", fallback=BUILTIN_PREFIX + "default14.rules"),
        base,
    )
    initial_tap = _get_int(cp, "controller", "initial_tap", 0)
    if not transformer.tap_min <= initial_tap <= transformer.tap_max:
        raise ConfigError(f"{path}: initial_tap outside the tap range")

    try:
        limits = ControllerLimits(
            max_tap_ops_per_day=_get_int(cp, "limits", "max_tap_ops_per_day", 30),
            max_cap_ops_per_day=_get_int(cp, "limits", "max_cap_ops_per_day", 6),
            tap_dwell_s=_get_float(cp, "limits", "tap_dwell_s", 60.0),
            cap_dwell_s=_get_float(cp, "limits", "cap_dwell_s", 300.0),
            tap_deadzone=_get_float(cp, "limits", "tap_deadzone", 0.7),
            cap_threshold=_get_float(cp, "limits", "cap_threshold", 0.5),
            persistence=_get_int(cp, "limits", "persistence", 3),
        )
        schedule = _parse_schedule(cp.get("schedule", "on_peak", fallback="10:00-14:00, 18:00-22:00"))
        quantization = QuantizationSpec(
            v_step_v=_get_float(cp, "scada", "v_step_v", 100.0),
            p_step_kw=_get_float(cp, "scada", "p_step_kw", 10.0),
            q_step_kvar=_get_float(cp, "scada", "q_step_kvar", 10.0),
            refresh_s=_get_float(cp, "scada", "refresh_s", 4.0),
        )
        seed = _get_int(cp, "sim", "seed", 0)
        noise = NoiseSpec(
            enabled=_get_bool(cp, "noise", "enabled", False),
            sigma_v_v=_get_float(cp, "noise", "sigma_v_v", 0.0),
            sigma_q_kvar=_get_float(cp, "noise", "sigma_q_kvar", 0.0),
            seed=_get_int(cp, "noise", "seed", seed),
        )
        baseline = BaselineWeights(
            w_v=_get_float(cp, "baseline", "w_v", 1.0),
            w_q=_get_float(cp, "baseline", "w_q", 10.0),
            w_s=_get_float(cp, "baseline", "w_s", 0.05),
            v_target_kv=_get_float(cp, "baseline", "v_target_kv", 21.0),
            pf_target=_get_float(cp, "baseline", "pf_target", 0.98),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    duration_s = _get_float(cp, "sim", "duration_s", 86400.0)
    step_s = _get_float(cp, "sim", "step_s", 4.0)
    if step_s <= 0.0 or duration_s <= 0.0:
        raise ConfigError(f"{path}: duration and step must be positive")
    if abs(step_s - quantization.refresh_s) > 1e-9:
        raise ConfigError(
            f"{path}: simulation step ({step_s}s) must equal the SCADA refresh "
            f"({quantization.refresh_s}s)"
        )
    n = duration_s / step_s
    if abs(n - round(n)) > 1e-9:
        raise ConfigError(f"{path}: duration must be a multiple of the step")

    if mode == "fis":
        for p, what in ((fis_path, "FIS file"), (rules_path, "rules file")):
            if not p.exists():
                raise ConfigError(f"{path}: {what} not found: {p}")

    return ScenarioConfig(
        transformer=transformer,
        capacitor=capacitor,
        profile=profile,
        v0_kv=v0_kv,
        zip_active=zip_active,
        zip_reactive=zip_reactive,
        v1_kv=v1_kv,
        v1_profile=v1_profile,
        controller_mode=mode,
        fis_path=fis_path,
        rules_path=rules_path,
        initial_tap=initial_tap,
        limits=limits,
        schedule=schedule,
        quantization=quantization,
        noise=noise,
        baseline=baseline,
        hv_metering_includes_losses=_get_bool(
            cp, "plant", "hv_metering_includes_losses", True
        ),
        duration_s=duration_s,
        step_s=step_s,
        seed=seed,
        source_path=path,
    )


def make_zip_load(cfg: ScenarioConfig, p0_mw: float, q0_mvar: float) -> ZipLoad:
    z_p, i_p, p_p = cfg.zip_active
    z_q, i_q, p_q = cfg.zip_reactive
    return ZipLoad(
        p0_mw=p0_mw, q0_mvar=q0_mvar, v0_kv=cfg.v0_kv,
        z_p=z_p, i_p=i_p, p_p=p_p, z_q=z_q, i_q=i_q, p_q=p_q,
    )


def _load_v1_csv(path: Path) -> LoadProfile:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["time_s", "v1_kv"]:
                raise ConfigError(f"{path}: expected header 'time_s,v1_kv'")
            points = []
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                points.append((float(row[0]), float(row[1]), 0.0))
    except OSError as exc:
        raise ConfigError(f"cannot read primary-voltage profile {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return LoadProfile(tuple(points))


def _parse_schedule(raw: str) -> PeakSchedule:
    windows = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            start_raw, end_raw = chunk.split("-")
            windows.append((_parse_hhmm(start_raw), _parse_hhmm(end_raw)))
        except ValueError as exc:
            raise ConfigError(f"bad on-peak window '{chunk}': {exc}") from exc
    try:
        return PeakSchedule(tuple(windows))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_hhmm(raw: str) -> float:
    parts = raw.strip().split(":")
    if len(parts) not in (1, 2):
        raise ValueError(f"expected HH or HH:MM, got '{raw}'")
    hours = int(parts[0])
    minutes = int(parts[1]) if len(parts) == 2 else 0
    if not (0 <= minutes < 60):
        raise ValueError(f"bad minutes in '{raw}'")
    return hours + minutes / 60.0


_ON_OFF = {"on": True, "off": False, "connected": True, "disconnected": False}


def _get_float(cp, section: str, key: str, default: float) -> float:
    raw = cp.get(section, key, fallback=None)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: not a number: '{raw}'") from exc


def _get_int(cp, section: str, key: str, default: int) -> int:
    raw = cp.get(section, key, fallback=None)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: not an integer: '{raw}'") from exc


def _get_bool(cp, section: str, key: str, default: bool, aliases=None) -> bool:
    raw = cp.get(section, key, fallback=None)
    if raw is None:
        return default
    value = raw.strip().lower()
    if aliases and value in aliases:
        return aliases[value]
    if value in ("true", "yes", "1"):
        return True
    if value in ("false", "no", "0"):
        return False
    raise ConfigError(f"[{section}] {key}: not a boolean: '{raw}'")


def _get_triple(cp, section: str, key: str, default, path) -> Tuple[float, float, float]:
    raw = cp.get(section, key, fallback=None)
    if raw is None:
        return default
    parts = raw.split()
    if len(parts) != 3:
        raise ConfigError(f"{path}: [{section}] {key} needs three fractions")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]

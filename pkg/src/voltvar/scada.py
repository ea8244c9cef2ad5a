"""SCADA measurement degradation: quantization, refresh, optional noise.

The control center never sees the true operating point.  Telemetry is
rounded to the acquisition resolution (100 V, 10 kW, 10 kVAr, 1 tap
position), refreshed every few seconds, and -- when enabled -- jittered
with seeded zero-mean Gaussian noise before quantization so runs stay
reproducible.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from .plant import OperatingPoint


@dataclass(frozen=True)
class QuantizationSpec:
    v_step_v: float = 100.0
    p_step_kw: float = 10.0
    q_step_kvar: float = 10.0
    tap_step: int = 1
    refresh_s: float = 4.0

    def __post_init__(self):
        for name in ("v_step_v", "p_step_kw", "q_step_kvar", "refresh_s"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class NoiseSpec:
    enabled: bool = False
    sigma_v_v: float = 100.0
    sigma_q_kvar: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_v_v < 0.0 or self.sigma_q_kvar < 0.0:
            raise ValueError("noise sigmas must be non-negative")

    def make_rng(self) -> random.Random:
        return random.Random(self.seed)


@dataclass(frozen=True)
class Measurement:
    """What the dispatch screen shows for one refresh instant."""

    time_s: float
    v2_kv: float
    p_mw: float
    q_hv_mvar: float
    pf: float
    leading: bool
    tap: int
    cap_connected: bool


def round_to_step(x: float, step: float) -> float:
    """Round to the nearest step multiple, ties away from zero.

    The tie test tolerates float representation error (21.35 stored as
    21.34999...) so decimal telemetry ties land on the intended side.
    """
    n = abs(x) / step
    value = math.floor(n + 0.5 + 1e-9) * step
    if value == 0.0:
        return 0.0
    return -value if x < 0.0 else value


def quantize(
    spec: QuantizationSpec,
    op: OperatingPoint,
    time_s: float = 0.0,
    noise: Optional[NoiseSpec] = None,
    rng: Optional[random.Random] = None,
) -> Measurement:
    """Degrade an operating point into a telemetry sample.

    Noise (when enabled) lands on the analog channels before rounding;
    tap position and breaker status pass through exactly.  The reported
    power factor is recomputed from the quantized powers, which is what
    erases small leading flows.
    """
    v2 = op.v2_kv
    q_hv = op.q_hv_mvar
    if noise is not None and noise.enabled:
        if rng is None:
            raise ValueError("noise is enabled but no generator was supplied")
        v2 += rng.gauss(0.0, noise.sigma_v_v / 1000.0)
        q_hv += rng.gauss(0.0, noise.sigma_q_kvar / 1000.0)
    v2_q = round_to_step(v2, spec.v_step_v / 1000.0)
    p_q = round_to_step(op.p_hv_mw, spec.p_step_kw / 1000.0)
    q_q = round_to_step(q_hv, spec.q_step_kvar / 1000.0)
    if p_q > 0.0:
        pf = p_q / math.hypot(p_q, q_q)
    else:
        pf = 1.0
    return Measurement(
        time_s=time_s,
        v2_kv=v2_q,
        p_mw=p_q,
        q_hv_mvar=q_q,
        pf=pf,
        leading=q_q < 0.0,
        tap=op.tap,
        cap_connected=op.cap_connected,
    )


def sample_clock(refresh_s: float, t_s: float) -> bool:
    """True when ``t_s`` is a refresh instant (epoch included)."""
    if refresh_s <= 0.0:
        raise ValueError("refresh period must be positive")
    n = t_s / refresh_s
    return abs(n - round(n)) < 1e-9

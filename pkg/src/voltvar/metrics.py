"""Run-log statistics: voltage deviation, power factor, switching counts.

Voltage quality is summarized by the mean value plus the maximum and
mean absolute deviation from the objective voltage.  Reactive
performance is compared through the squared power-factor ratio -- the
Joule-loss proxy for two controllers serving the same load -- per
sample and averaged over an aligned span.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

DEFAULT_REF_KV = 21.0


class AlignmentError(ValueError):
    """The two series do not share timestamps over the compared span."""


@dataclass(frozen=True)
class SeriesSample:
    time_s: float
    v2_kv: float
    pf: float
    leading: bool
    tap: int
    cap_connected: bool


@dataclass(frozen=True)
class SummaryStats:
    n: int
    u_mean_kv: float
    d_max_kv: float
    d_mean_kv: float
    pf_min: float
    pf_ge_098_fraction: float
    pf_ge_099_fraction: float
    leading_duration_s: float
    tap_ops: int
    tap_positions_moved: int
    cap_ops: int

    def lines(self) -> list[str]:
        return [
            f"n = {self.n}",
            f"u_mean_kv = {self.u_mean_kv:.4f}",
            f"d_max_kv = {self.d_max_kv:.4f}",
            f"d_mean_kv = {self.d_mean_kv:.4f}",
            f"pf_min = {self.pf_min:.6f}",
            f"pf_ge_098_fraction = {self.pf_ge_098_fraction:.6f}",
            f"pf_ge_099_fraction = {self.pf_ge_099_fraction:.6f}",
            f"leading_duration_s = {self.leading_duration_s:.1f}",
            f"tap_ops = {self.tap_ops}",
            f"tap_positions_moved = {self.tap_positions_moved}",
            f"cap_ops = {self.cap_ops}",
        ]


def mean_voltage(series: Sequence[SeriesSample]) -> float:
    if not series:
        raise ValueError("empty series")
    return sum(s.v2_kv for s in series) / len(series)


def max_deviation(series: Sequence[SeriesSample], ref_kv: float = DEFAULT_REF_KV) -> float:
    if not series:
        raise ValueError("empty series")
    return max(abs(s.v2_kv - ref_kv) for s in series)


def mean_deviation(series: Sequence[SeriesSample], ref_kv: float = DEFAULT_REF_KV) -> float:
    if not series:
        raise ValueError("empty series")
    return sum(abs(s.v2_kv - ref_kv) for s in series) / len(series)


def losses_ratio(cos_ref: float, cos_test: float) -> float:
    """Squared power-factor ratio: < 1 means the test case loses less."""
    if cos_ref <= 0.0 or cos_test <= 0.0 or cos_ref > 1.0 or cos_test > 1.0:
        raise ValueError("power factors must lie in (0, 1]")
    return (cos_ref / cos_test) ** 2


def loss_reduction_percent(ratio: float) -> float:
    return (1.0 - ratio) * 100.0


def avg_losses_ratio(
    series_ref: Sequence[SeriesSample], series_test: Sequence[SeriesSample]
) -> float:
    """Mean per-sample losses ratio over two timestamp-aligned series."""
    _check_aligned(series_ref, series_test)
    total = 0.0
    for a, b in zip(series_ref, series_test):
        total += losses_ratio(a.pf, b.pf)
    return total / len(series_ref)


def _check_aligned(
    ref: Sequence[SeriesSample], test: Sequence[SeriesSample]
) -> None:
    if len(ref) != len(test):
        raise AlignmentError(
            f"series lengths differ: {len(ref)} vs {len(test)}"
        )
    if not ref:
        raise AlignmentError("empty series")
    for a, b in zip(ref, test):
        if a.time_s != b.time_s:
            raise AlignmentError(
                f"timestamps diverge at {a.time_s} vs {b.time_s}"
            )


def summarize(
    series: Sequence[SeriesSample], ref_kv: float = DEFAULT_REF_KV
) -> SummaryStats:
    """Full statistics for one run log.

    A tap operation is one emitted change event whatever its size; the
    positions counter accumulates |delta| separately.  Capacitor
    operations count breaker state changes.  Leading duration weights
    each sample by its step (the last sample reuses the previous step).
    """
    if not series:
        raise ValueError("empty series")
    n = len(series)
    pf98 = sum(1 for s in series if s.pf >= 0.98) / n
    pf99 = sum(1 for s in series if s.pf >= 0.99) / n

    leading_s = 0.0
    for i, s in enumerate(series):
        if i + 1 < n:
            dt = series[i + 1].time_s - s.time_s
        elif n >= 2:
            dt = series[i].time_s - series[i - 1].time_s
        else:
            dt = 0.0
        if s.leading:
            leading_s += dt

    tap_ops = 0
    tap_positions = 0
    cap_ops = 0
    for prev, cur in zip(series, series[1:]):
        if cur.tap != prev.tap:
            tap_ops += 1
            tap_positions += abs(cur.tap - prev.tap)
        if cur.cap_connected != prev.cap_connected:
            cap_ops += 1

    return SummaryStats(
        n=n,
        u_mean_kv=mean_voltage(series),
        d_max_kv=max_deviation(series, ref_kv),
        d_mean_kv=mean_deviation(series, ref_kv),
        pf_min=min(s.pf for s in series),
        pf_ge_098_fraction=pf98,
        pf_ge_099_fraction=pf99,
        leading_duration_s=leading_s,
        tap_ops=tap_ops,
        tap_positions_moved=tap_positions,
        cap_ops=cap_ops,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Side-by-side statistics plus the averaged losses ratio."""

    ref_stats: SummaryStats
    test_stats: SummaryStats
    phi_mean: float
    phi_mean_interval: Optional[float]
    interval: Optional[Tuple[float, float]]
    phi_profile: Tuple[Tuple[float, float], ...]
    d_mean_ratio: float

    @property
    def d_mean_reduction_percent(self) -> float:
        return (1.0 - self.d_mean_ratio) * 100.0

    @property
    def phi_reduction_percent(self) -> float:
        return loss_reduction_percent(self.phi_mean)

    def lines(self) -> list[str]:
        out = [
            f"phi_mean = {self.phi_mean:.4f}",
            f"phi_mean_loss_reduction_percent = {self.phi_reduction_percent:.2f}",
        ]
        if self.phi_mean_interval is not None and self.interval is not None:
            lo, hi = self.interval
            out += [
                f"interval = {_fmt_hms(lo)} to {_fmt_hms(hi)}",
                f"phi_mean_interval = {self.phi_mean_interval:.4f}",
                "phi_mean_interval_loss_reduction_percent = "
                f"{loss_reduction_percent(self.phi_mean_interval):.2f}",
            ]
        out += [
            f"d_mean_ratio = {self.d_mean_ratio:.4f}",
            f"d_mean_reduction_percent = {self.d_mean_reduction_percent:.2f}",
        ]
        out += ["[ref] " + line for line in self.ref_stats.lines()]
        out += ["[test] " + line for line in self.test_stats.lines()]
        return out


def _fmt_hms(t_s: float) -> str:
    t = int(round(t_s)) % 86400
    return f"{t // 3600:02d}:{(t % 3600) // 60:02d}:{t % 60:02d}"


def _in_interval(t_s: float, lo: float, hi: float) -> bool:
    h = t_s % 86400.0
    if lo <= hi:
        return lo <= h <= hi
    return h >= lo or h <= hi  # wraps midnight


def compare(
    series_ref: Sequence[SeriesSample],
    series_test: Sequence[SeriesSample],
    interval: Optional[Tuple[float, float]] = None,
    ref_kv: float = DEFAULT_REF_KV,
) -> ComparisonReport:
    """Compare two aligned logs; ``interval`` is (start_s, end_s) of day.

    The interval may wrap midnight (start > end selects the night
    span).  An interval that selects no samples is a contract error.
    """
    _check_aligned(series_ref, series_test)
    profile = tuple(
        (a.time_s, losses_ratio(a.pf, b.pf))
        for a, b in zip(series_ref, series_test)
    )
    phi_mean = sum(p for _, p in profile) / len(profile)

    phi_interval = None
    if interval is not None:
        lo, hi = interval
        selected = [p for t, p in profile if _in_interval(t, lo, hi)]
        if not selected:
            raise AlignmentError(
                f"interval {_fmt_hms(lo)}..{_fmt_hms(hi)} selects no samples"
            )
        phi_interval = sum(selected) / len(selected)

    d_ref = mean_deviation(series_ref, ref_kv)
    d_test = mean_deviation(series_test, ref_kv)
    if d_ref <= 0.0:
        d_ratio = 1.0 if d_test == 0.0 else float("inf")
    else:
        d_ratio = d_test / d_ref

    return ComparisonReport(
        ref_stats=summarize(series_ref, ref_kv),
        test_stats=summarize(series_test, ref_kv),
        phi_mean=phi_mean,
        phi_mean_interval=phi_interval,
        interval=interval,
        phi_profile=profile,
        d_mean_ratio=d_ratio,
    )

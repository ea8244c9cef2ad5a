"""Telemetry degradation tests: rounding rules, noise determinism."""

import random

import pytest

from voltvar.plant import CapacitorBank, TransformerParams, ZipLoad, solve_operating_point
from voltvar.scada import (
    NoiseSpec,
    QuantizationSpec,
    quantize,
    round_to_step,
    sample_clock,
)

SPEC = QuantizationSpec()


def make_op(p=30.0, q=6.0, tap=0, cap_on=False):
    return solve_operating_point(
        TransformerParams(),
        CapacitorBank(connected=cap_on),
        ZipLoad(p, q),
        66.0,
        tap,
    )


def test_round_nearest_step():
    assert round_to_step(21.347, 0.1) == pytest.approx(21.3)


def test_round_tie_away_from_zero():
    assert round_to_step(21.35, 0.1) == pytest.approx(21.4)
    assert round_to_step(-0.005, 0.01) == pytest.approx(-0.01)


def test_round_small_leading_flow_erased():
    assert round_to_step(-0.004, 0.01) == 0.0


def test_round_never_returns_negative_zero():
    value = round_to_step(-0.004, 0.01)
    assert str(value) == "0.0"


def test_quantize_channels():
    op = make_op()
    m = quantize(SPEC, op, time_s=12.0)
    assert m.time_s == 12.0
    assert m.v2_kv == pytest.approx(round_to_step(op.v2_kv, 0.1))
    assert m.p_mw == pytest.approx(round_to_step(op.p_hv_mw, 0.01))
    assert m.q_hv_mvar == pytest.approx(round_to_step(op.q_hv_mvar, 0.01))
    assert m.tap == op.tap
    assert m.cap_connected == op.cap_connected


def test_quantize_idempotent_per_channel():
    op = make_op()
    m = quantize(SPEC, op, 0.0)
    assert round_to_step(m.v2_kv, 0.1) == pytest.approx(m.v2_kv)
    assert round_to_step(m.p_mw, 0.01) == pytest.approx(m.p_mw)
    assert round_to_step(m.q_hv_mvar, 0.01) == pytest.approx(m.q_hv_mvar)


def test_quantize_error_bounded_by_half_step():
    rng = random.Random(8)
    for _ in range(300):
        x = rng.uniform(-50, 50)
        for step in (0.1, 0.01, 0.25):
            err = abs(round_to_step(x, step) - x)
            assert err <= step / 2 + 1e-12


def test_quantize_grid_invariant():
    rng = random.Random(21)
    for _ in range(100):
        v = round_to_step(rng.uniform(19, 23), 0.1)
        n = v * 10.0
        assert abs(n - round(n)) < 1e-9


def test_quantized_pf_recomputed():
    op = make_op(p=10.0, q=0.5, cap_on=True)
    m = quantize(SPEC, op, 0.0)
    assert m.q_hv_mvar < 0.0
    assert m.leading
    expected_pf = m.p_mw / (m.p_mw**2 + m.q_hv_mvar**2) ** 0.5
    assert m.pf == pytest.approx(expected_pf)


def test_quantized_zero_power_pf_is_one():
    op = make_op(p=0.0, q=0.0)
    m = quantize(SPEC, op, 0.0)
    assert m.pf == 1.0
    assert not m.leading


def test_noise_requires_rng():
    noise = NoiseSpec(enabled=True, sigma_v_v=100.0)
    with pytest.raises(ValueError):
        quantize(SPEC, make_op(), 0.0, noise, None)


def test_noise_seeded_determinism():
    noise = NoiseSpec(enabled=True, sigma_v_v=150.0, sigma_q_kvar=80.0, seed=5)
    op = make_op()
    stream_a = [
        quantize(SPEC, op, t, noise, rng) for rng in [noise.make_rng()] for t in range(0, 40, 4)
    ]
    stream_b = [
        quantize(SPEC, op, t, noise, rng) for rng in [noise.make_rng()] for t in range(0, 40, 4)
    ]
    assert stream_a == stream_b
    other = NoiseSpec(enabled=True, sigma_v_v=150.0, sigma_q_kvar=80.0, seed=6)
    stream_c = [
        quantize(SPEC, op, t, other, rng) for rng in [other.make_rng()] for t in range(0, 40, 4)
    ]
    assert stream_c != stream_a


def test_noise_off_passthrough():
    op = make_op()
    with_spec = quantize(SPEC, op, 0.0, NoiseSpec(enabled=False, sigma_v_v=500.0), None)
    plain = quantize(SPEC, op, 0.0)
    assert with_spec == plain


def test_spec_validation():
    with pytest.raises(ValueError):
        QuantizationSpec(v_step_v=0.0)
    with pytest.raises(ValueError):
        NoiseSpec(sigma_v_v=-1.0)


def test_sample_clock():
    assert sample_clock(4.0, 8.0)
    assert not sample_clock(4.0, 6.0)
    assert sample_clock(4.0, 0.0)
    with pytest.raises(ValueError):
        sample_clock(0.0, 4.0)

"""Closed-loop driver tests: determinism, logging, replay consistency."""

import filecmp
from pathlib import Path

import pytest

from voltvar.cli import main
from voltvar.config import load_fis_with_rules, load_scenario
from voltvar.control import ControllerState, enforce_limits, fis_decide
from voltvar.scada import Measurement
from voltvar.sim import (
    RUNLOG_HEADER,
    format_summary,
    read_runlog,
    records_to_series,
    run_scenario,
    write_runlog,
)

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

CONSTANT_LOAD = "time_s,p_mw,q_mvar\n0,20,4\n"

SHORT = """
[sim]
duration_s = {duration}
step_s = 4
seed = 3

[load]
profile_csv = load.csv

[controller]
mode = {mode}
initial_tap = {tap}
initial_cap = {cap}

{extra}
"""


def scenario(tmp_path, mode="none", duration=400, tap=0, cap="off", extra="", load=CONSTANT_LOAD):
    (tmp_path / "load.csv").write_text(load, encoding="utf-8")
    p = tmp_path / "s.cfg"
    p.write_text(
        SHORT.format(mode=mode, duration=duration, tap=tap, cap=cap, extra=extra),
        encoding="utf-8",
    )
    return load_scenario(p)


def test_no_controller_constant_load_is_flat(tmp_path):
    cfg = scenario(tmp_path)
    records, stats = run_scenario(cfg)
    assert len(records) == cfg.steps() + 1
    assert len({r.tap for r in records}) == 1
    assert len({r.cap for r in records}) == 1
    assert len({r.v2_true_kv for r in records}) == 1
    assert stats.tap_ops == 0 and stats.cap_ops == 0


def test_record_count_includes_epoch(tmp_path):
    cfg = scenario(tmp_path, duration=40)
    records, _ = run_scenario(cfg)
    assert len(records) == 11
    assert records[0].time_s == 0.0
    assert records[-1].time_s == 40.0


def test_fis_mode_regulates_low_voltage(tmp_path):
    # start two taps low: the controller should step the voltage back up
    cfg = scenario(tmp_path, mode="fis", duration=1200, tap=-2)
    records, stats = run_scenario(cfg)
    assert records[0].v2_true_kv < 20.6
    assert records[-1].v2_true_kv > 20.8
    assert stats.tap_ops >= 1


def test_actions_take_effect_next_step(tmp_path):
    cfg = scenario(tmp_path, mode="fis", duration=1200, tap=-2)
    records, _ = run_scenario(cfg)
    for prev, cur in zip(records, records[1:]):
        assert cur.tap == min(max(prev.tap + prev.action_tap, -6), 15)


def test_runlog_roundtrip(tmp_path):
    cfg = scenario(tmp_path, mode="fis", duration=400, tap=-2)
    records, _ = run_scenario(cfg)
    path = tmp_path / "log.csv"
    write_runlog(path, records)
    back = read_runlog(path)
    assert len(back) == len(records)
    for a, b in zip(records, back):
        assert b.time_s == a.time_s
        assert b.v2_meas_kv == pytest.approx(a.v2_meas_kv, abs=1e-4)
        assert b.tap == a.tap and b.cap == a.cap
        assert b.action_tap == a.action_tap and b.action_cap == a.action_cap


def test_runlog_header_pinned(tmp_path):
    cfg = scenario(tmp_path, duration=40)
    records, _ = run_scenario(cfg)
    path = tmp_path / "log.csv"
    write_runlog(path, records)
    first = path.read_text(encoding="utf-8").splitlines()[0]
    assert first == ",".join(RUNLOG_HEADER)
    assert first == (
        "time_s,v1_kv,v2_true_kv,v2_meas_kv,p_mw,q_hv_mvar,pf,leading,tap,cap,"
        "action_tap,action_cap,suppressed_by"
    )


def test_summary_covers_every_field(tmp_path):
    cfg = scenario(tmp_path, duration=40)
    _, stats = run_scenario(cfg)
    text = format_summary(stats)
    for key in (
        "n",
        "u_mean_kv",
        "d_max_kv",
        "d_mean_kv",
        "pf_min",
        "pf_ge_098_fraction",
        "pf_ge_099_fraction",
        "leading_duration_s",
        "tap_ops",
        "tap_positions_moved",
        "cap_ops",
    ):
        assert f"{key} = " in text


NOISY_EXTRA = """
[noise]
enabled = true
sigma_v_v = 200
sigma_q_kvar = 100
seed = 11
"""


def test_seeded_noise_is_reproducible(tmp_path):
    cfg = scenario(tmp_path, mode="fis", duration=800, extra=NOISY_EXTRA)
    rec_a, _ = run_scenario(cfg)
    rec_b, _ = run_scenario(cfg)
    assert rec_a == rec_b


def test_byte_identical_csv_across_runs(tmp_path):
    cfg_path = tmp_path / "s.cfg"
    (tmp_path / "load.csv").write_text(CONSTANT_LOAD, encoding="utf-8")
    cfg_path.write_text(
        SHORT.format(mode="fis", duration=800, tap=0, cap="off", extra=NOISY_EXTRA),
        encoding="utf-8",
    )
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", str(cfg_path), "--out", str(out_a)]) == 0
    assert main(["simulate", str(cfg_path), "--out", str(out_b)]) == 0
    assert filecmp.cmp(out_a, out_b, shallow=False)


def test_log_replay_reproduces_actions(tmp_path):
    """Every logged action is recoverable from the logged measurements."""
    cfg = scenario(tmp_path, mode="fis", duration=1200, tap=-2)
    records, _ = run_scenario(cfg)
    fis, _ = load_fis_with_rules(cfg.fis_path, cfg.rules_path)
    state = ControllerState()
    for r in records:
        m = Measurement(
            time_s=r.time_s,
            v2_kv=r.v2_meas_kv,
            p_mw=r.p_mw,
            q_hv_mvar=r.q_hv_mvar,
            pf=r.pf,
            leading=r.leading,
            tap=r.tap,
            cap_connected=r.cap,
        )
        decided = fis_decide(fis, m, (r.time_s % 86400.0) / 3600.0, cfg.schedule, cfg.limits)
        action, state = enforce_limits(decided, state, cfg.limits, r.time_s)
        assert action.tap_delta == r.action_tap, r.time_s
        assert action.cap_command == r.action_cap, r.time_s


def test_solver_failure_reports_timestamp(tmp_path):
    cfg = scenario(tmp_path, load="time_s,p_mw,q_mvar\n0,20,4\n400,600,300\n", duration=800)
    from voltvar.sim import ScenarioError

    with pytest.raises(ScenarioError, match="t="):
        run_scenario(cfg)


def test_series_extraction_uses_measured_channels(tmp_path):
    cfg = scenario(tmp_path, duration=40)
    records, _ = run_scenario(cfg)
    series = records_to_series(records)
    assert [s.v2_kv for s in series] == [r.v2_meas_kv for r in records]
    assert [s.pf for s in series] == [r.pf for r in records]


# ---------------------------------------------------------------------------
# CLI surface


def test_cli_simulate_writes_outputs(tmp_path, capsys):
    (tmp_path / "load.csv").write_text(CONSTANT_LOAD, encoding="utf-8")
    cfg_path = tmp_path / "s.cfg"
    cfg_path.write_text(
        SHORT.format(mode="none", duration=40, tap=0, cap="off", extra=""),
        encoding="utf-8",
    )
    log, summary = tmp_path / "log.csv", tmp_path / "summary.txt"
    code = main(["simulate", str(cfg_path), "--out", str(log), "--summary", str(summary)])
    assert code == 0
    assert log.exists() and summary.exists()
    out = capsys.readouterr().out
    assert "u_mean_kv" in out


def test_cli_evaluate_self_comparison(tmp_path, capsys):
    (tmp_path / "load.csv").write_text(CONSTANT_LOAD, encoding="utf-8")
    cfg_path = tmp_path / "s.cfg"
    cfg_path.write_text(
        SHORT.format(mode="none", duration=40, tap=0, cap="off", extra=""),
        encoding="utf-8",
    )
    log = tmp_path / "log.csv"
    main(["simulate", str(cfg_path), "--out", str(log)])
    code = main(["evaluate", str(log), str(log)])
    assert code == 0
    out = capsys.readouterr().out
    assert "phi_mean = 1.0000" in out


def test_cli_evaluate_missing_file_is_io_error(tmp_path, capsys):
    code = main(["evaluate", str(tmp_path / "a.csv"), str(tmp_path / "b.csv")])
    assert code == 2


def test_cli_simulate_missing_config_is_io_error(tmp_path, capsys):
    code = main(["simulate", str(tmp_path / "nope.cfg")])
    assert code == 2


def test_cli_evaluate_with_interval(tmp_path, capsys):
    (tmp_path / "load.csv").write_text(CONSTANT_LOAD, encoding="utf-8")
    cfg_path = tmp_path / "s.cfg"
    cfg_path.write_text(
        SHORT.format(mode="none", duration=400, tap=0, cap="off", extra=""),
        encoding="utf-8",
    )
    log = tmp_path / "log.csv"
    main(["simulate", str(cfg_path), "--out", str(log)])
    code = main(
        ["evaluate", str(log), str(log), "--from", "00:00:04", "--to", "00:01:00"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "phi_mean_interval = 1.0000" in out
    assert "interval = 00:00:04 to 00:01:00" in out


def test_cli_evaluate_interval_needs_both_flags(tmp_path, capsys):
    (tmp_path / "load.csv").write_text(CONSTANT_LOAD, encoding="utf-8")
    cfg_path = tmp_path / "s.cfg"
    cfg_path.write_text(
        SHORT.format(mode="none", duration=40, tap=0, cap="off", extra=""),
        encoding="utf-8",
    )
    log = tmp_path / "log.csv"
    main(["simulate", str(cfg_path), "--out", str(log)])
    assert main(["evaluate", str(log), str(log), "--from", "00:00:00"]) == 1


def test_cli_infer_prints_rule_table(capsys):
    from voltvar.config import builtin_fis_path, builtin_rules_path

    code = main(
        [
            "infer",
            str(builtin_fis_path()),
            str(builtin_rules_path()),
            "--in", "Voltage=21.4",
            "--in", "Reactive_power=4.5",
            "--in", "Tap=5",
            "--in", "Shunt_Off=0",
            "--in", "Time=3",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "Capacitor = 1.0000" in out
    assert "rule firings:" in out


def test_cli_infer_malformed_rules(tmp_path, capsys):
    from voltvar.config import builtin_fis_path

    bad = tmp_path / "bad.rules"
    bad.write_text("If (Voltage is) then (Tap is 0)\n", encoding="utf-8")
    code = main(["infer", str(builtin_fis_path()), str(bad), "--in", "Voltage=21"])
    assert code == 1
    out = capsys.readouterr().out
    assert "error" in out


def test_cli_validate_shipped_config():
    assert main(["validate", str(SCENARIOS / "day24h.cfg")]) == 0


def test_cli_validate_step_mismatch(tmp_path, capsys):
    (tmp_path / "load.csv").write_text(CONSTANT_LOAD, encoding="utf-8")
    cfg_path = tmp_path / "s.cfg"
    cfg_path.write_text(
        SHORT.format(mode="none", duration=40, tap=0, cap="off", extra="[scada]\nrefresh_s = 2\n"),
        encoding="utf-8",
    )
    assert main(["validate", str(cfg_path)]) == 1


def test_cli_validate_unknown_rule_variable(tmp_path, capsys):
    (tmp_path / "load.csv").write_text(CONSTANT_LOAD, encoding="utf-8")
    bad_rules = tmp_path / "r.rules"
    bad_rules.write_text("If (Frequency is High) then (Tap is 0)\n", encoding="utf-8")
    cfg_path = tmp_path / "s.cfg"
    cfg_path.write_text(
        SHORT.format(mode="fis", duration=40, tap=0, cap="off", extra="").replace(
            "mode = fis", "mode = fis\nrules_file = r.rules"
        ),
        encoding="utf-8",
    )
    assert main(["validate", str(cfg_path)]) == 1
    out = capsys.readouterr().out
    assert "Frequency" in out


def test_random_profiles_respect_switching_discipline(tmp_path):
    """Whatever the load does, budgets and dwell times hold in closed loop."""
    import random as _random

    rng = _random.Random(8675309)
    for trial in range(8):
        rows = ["time_s,p_mw,q_mvar"]
        t = 0
        while t <= 7200:
            rows.append(f"{t},{rng.uniform(2, 38):.2f},{rng.uniform(-2, 9):.2f}")
            t += rng.randint(300, 1200)
        sub = tmp_path / f"trial{trial}"
        sub.mkdir()
        (sub / "load.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        cfg_path = sub / "s.cfg"
        cfg_path.write_text(
            SHORT.format(
                mode="fis",
                duration=7200,
                tap=rng.randint(-2, 4),
                cap="on" if rng.random() < 0.5 else "off",
                extra="",
            ),
            encoding="utf-8",
        )
        cfg = load_scenario(cfg_path)
        records, stats = run_scenario(cfg)
        assert stats.tap_ops <= cfg.limits.max_tap_ops_per_day
        assert stats.cap_ops <= cfg.limits.max_cap_ops_per_day
        tap_times = [r.time_s for r in records if r.action_tap != 0]
        cap_times = [r.time_s for r in records if r.action_cap != "hold"]
        assert all(
            b - a >= cfg.limits.tap_dwell_s for a, b in zip(tap_times, tap_times[1:])
        )
        assert all(
            b - a >= cfg.limits.cap_dwell_s for a, b in zip(cap_times, cap_times[1:])
        )

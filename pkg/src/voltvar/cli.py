"""Command-line surface: simulate, evaluate, infer, validate.

Exit codes: 0 on success, 1 when diagnostics or runtime errors were
reported, 2 for I/O problems (missing or unreadable files).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import (
    ConfigError,
    load_fis_with_rules,
    load_scenario,
)
from .fuzzy import infer, validate_fis
from .metrics import AlignmentError, compare
from .ruledsl import line_col, lint
from .sim import (
    ScenarioError,
    format_summary,
    read_runlog,
    records_to_series,
    run_scenario,
    write_runlog,
    write_summary,
)

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_IO = 2


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScenarioError, AlignmentError) as exc:
        if isinstance(exc.__cause__, OSError):
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voltvar",
        description="Deterministic volt/VAR control testbed for a distribution substation.",
    )
    sub = parser.add_subparsers(required=True)

    p_sim = sub.add_parser("simulate", help="run a closed-loop scenario")
    p_sim.add_argument("config", type=Path)
    p_sim.add_argument("--out", type=Path, default=None, help="run-log CSV path")
    p_sim.add_argument("--summary", type=Path, default=None, help="summary text path")
    p_sim.set_defaults(func=_cmd_simulate)

    p_eval = sub.add_parser("evaluate", help="compare two run logs")
    p_eval.add_argument("ref", type=Path, help="reference run-log CSV")
    p_eval.add_argument("test", type=Path, help="run-log CSV under test")
    p_eval.add_argument("--from", dest="interval_from", default=None, metavar="HH:MM:SS")
    p_eval.add_argument("--to", dest="interval_to", default=None, metavar="HH:MM:SS")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_infer = sub.add_parser("infer", help="run one inference and show rule firings")
    p_infer.add_argument("fis", type=Path)
    p_infer.add_argument("rules", type=Path)
    p_infer.add_argument(
        "--in",
        dest="inputs",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="crisp input, repeatable",
    )
    p_infer.set_defaults(func=_cmd_infer)

    p_val = sub.add_parser("validate", help="check a scenario and its FIS/rules")
    p_val.add_argument("config", type=Path)
    p_val.set_defaults(func=_cmd_validate)

    return parser


def _cmd_simulate(args) -> int:
    cfg = load_scenario(args.config)
    records, stats = run_scenario(cfg)
    if args.out is not None:
        write_runlog(args.out, records)
        print(f"wrote {len(records)} records to {args.out}")
    if args.summary is not None:
        write_summary(args.summary, stats)
        print(f"wrote summary to {args.summary}")
    print(format_summary(stats), end="")
    return EXIT_OK


def _parse_hms(raw: str) -> float:
    parts = raw.split(":")
    if len(parts) != 3:
        raise ConfigError(f"expected HH:MM:SS, got '{raw}'")
    h, m, s = (int(p) for p in parts)
    if not (0 <= m < 60 and 0 <= s < 60):
        raise ConfigError(f"bad minutes/seconds in '{raw}'")
    return h * 3600.0 + m * 60.0 + s


def _cmd_evaluate(args) -> int:
    interval = None
    if (args.interval_from is None) != (args.interval_to is None):
        raise ConfigError("--from and --to must be given together")
    if args.interval_from is not None:
        interval = (_parse_hms(args.interval_from), _parse_hms(args.interval_to))
    ref = records_to_series(read_runlog(args.ref))
    test = records_to_series(read_runlog(args.test))
    report = compare(ref, test, interval)
    for line in report.lines():
        print(line)
    return EXIT_OK


def _cmd_infer(args) -> int:
    fis, parse_diags = load_fis_with_rules(args.fis, args.rules)
    diags = list(parse_diags) + validate_fis(fis) + lint(list(fis.rules), fis)
    _print_diagnostics(diags, args.rules)
    if any(d.is_error() for d in diags):
        return EXIT_DIAGNOSTICS

    inputs = {}
    for item in args.inputs:
        if "=" not in item:
            raise ConfigError(f"--in expects NAME=VALUE, got '{item}'")
        name, raw = item.split("=", 1)
        try:
            inputs[name.strip()] = float(raw)
        except ValueError as exc:
            raise ConfigError(f"--in {name}: not a number: '{raw}'") from exc

    try:
        result = infer(fis, inputs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS

    for name, value in result.values.items():
        flag = "  (no rule fired)" if result.no_rule_fired[name] else ""
        print(f"{name} = {value:.4f}{flag}")
    print("rule firings:")
    for fired in result.fired:
        print(f"  [{fired.index + 1:2d}] {fired.strength:.4f}  {fired.text}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        cfg = load_scenario(args.config)
    except ConfigError as exc:
        print(f"error: {exc}")
        return EXIT_DIAGNOSTICS

    diags = []
    if cfg.controller_mode == "fis":
        fis, parse_diags = load_fis_with_rules(cfg.fis_path, cfg.rules_path)
        diags = list(parse_diags) + validate_fis(fis) + lint(list(fis.rules), fis)
        _print_diagnostics(diags, cfg.rules_path)
    errors = sum(1 for d in diags if d.is_error())
    warnings = len(diags) - errors
    print(f"{args.config}: {errors} error(s), {warnings} warning(s)")
    return EXIT_DIAGNOSTICS if errors else EXIT_OK


def _print_diagnostics(diags, rules_path) -> None:
    text = None
    for d in diags:
        where = ""
        if getattr(d, "span", None) is not None:
            if text is None:
                try:
                    text = Path(rules_path).read_text(encoding="utf-8")
                except OSError:
                    text = ""
            line, col = line_col(text, d.span[0])
            where = f"{rules_path}:{line}:{col}: "
        print(f"{where}{d.severity}: {d.message}")


if __name__ == "__main__":
    sys.exit(main())

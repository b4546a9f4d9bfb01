"""Command-line front end: run scenarios, sweep fixed windows, rebuild
metric reports from traces.

Exit codes: 0 success, 1 usage error, 2 scenario validation error,
3 runtime error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report as rpt
from .metrics import SweepPoint, knee_from_sweep
from .scenario import (Scenario, ScenarioError, load_bundled, parse_scenario,
                       with_overrides)
from .simkernel import fixed_window_run, run as run_simulation

USAGE_ERROR = 1
SCENARIO_ERROR = 2
RUNTIME_ERROR = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the interface reserves 2 for
    # scenario validation, so remap.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _load_scenario(ref: str, params: list[str], *, explicit_ack: bool,
                   seed: int | None) -> Scenario:
    path = Path(ref)
    if path.exists():
        scenario = parse_scenario(path.read_text())
    else:
        scenario = load_bundled(ref)
    overrides = {}
    for item in params:
        key, sep, value = item.partition("=")
        if not sep:
            raise ScenarioError(f"--param needs key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    if explicit_ack:
        overrides.setdefault("run.explicit_ack", "true")
    if seed is not None:
        overrides.setdefault("run.seed", str(seed))
    if overrides:
        scenario = with_overrides(scenario, overrides)
    return scenario


def _parse_window_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    if not sep:
        lo = hi = text
    try:
        first, last = int(lo), int(hi)
    except ValueError:
        raise ScenarioError(f"bad window range {text!r}; expected A..B") from None
    if first < 1 or last < first:
        raise ScenarioError(f"bad window range {text!r}: need 1 <= A <= B")
    return range(first, last + 1)


def _out_dir(arg: str) -> Path:
    out = Path(arg)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario, args.param,
                              explicit_ack=args.explicit_ack, seed=args.seed)
    result = run_simulation(scenario)
    out = _out_dir(args.out)
    with open(out / "trace.csv", "w") as fp:
        rpt.write_trace(result.trace, fp, seed=result.seed, prng=result.prng)
    report = rpt.build_report(result)
    with open(out / "report.txt", "w") as tfp, open(out / "report.csv", "w") as cfp:
        rpt.write_report(report, tfp, cfp)
    print(rpt.report_text(report), end="")
    print(f"trace: {out / 'trace.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    scenario = _load_scenario(args.scenario, args.param,
                              explicit_ack=args.explicit_ack, seed=args.seed)
    windows = _parse_window_range(args.windows)
    out = _out_dir(args.out)
    per_user: dict[str, list[SweepPoint]] = {u.name: [] for u in scenario.users}
    lines = [("window", "user", "throughput", "response_time", "power")]
    for w in windows:
        result = fixed_window_run(scenario, w)
        for name in per_user:
            point = result.sweep_point(name)
            per_user[name].append(point)
            lines.append((str(w), name, repr(point.throughput),
                          repr(point.response_time), repr(point.power())))
    with open(out / "sweep.csv", "w") as fp:
        fp.write("\n".join(",".join(row) for row in lines) + "\n")
    for name, points in per_user.items():
        window, peak = knee_from_sweep(points)
        print(f"{name}: knee window {window} (power {peak:.6g})")
    print(f"sweep table: {out / 'sweep.csv'}")
    return 0


def _cmd_metrics(args) -> int:
    scenario = _load_scenario(args.scenario, args.param,
                              explicit_ack=False, seed=None)
    with open(args.trace) as fp:
        _, records = rpt.read_trace(fp)
    report = rpt.metrics_from_trace(records, scenario)
    out = _out_dir(args.out)
    with open(out / "report.txt", "w") as tfp, open(out / "report.csv", "w") as cfp:
        rpt.write_report(report, tfp, cfp)
    print(rpt.report_text(report), end="")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="cavsim",
        description="Binary-feedback congestion avoidance simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-o", "--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override run seed")
        p.add_argument("--explicit-ack", action="store_true",
                       help="route acks through the configured return delay")
        p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                       help="override a run/params field, e.g. run.end_time=5000")

    p_run = sub.add_parser("run", help="run a scenario, write trace and report")
    p_run.add_argument("scenario", help="scenario file or bundled name")
    common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="fixed-window sweep with knee estimate")
    p_sweep.add_argument("scenario", help="scenario file or bundled name")
    p_sweep.add_argument("--windows", required=True, metavar="A..B",
                         help="inclusive window range")
    common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_metrics = sub.add_parser("metrics", help="recompute a report from a trace")
    p_metrics.add_argument("trace", help="trace CSV written by run")
    p_metrics.add_argument("scenario", help="scenario file or bundled name")
    p_metrics.add_argument("-o", "--out", default=".", help="output directory")
    p_metrics.add_argument("--param", action="append", default=[],
                           metavar="KEY=VALUE")
    p_metrics.set_defaults(func=_cmd_metrics)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_ERROR
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"cavsim: scenario error: {exc}", file=sys.stderr)
        return SCENARIO_ERROR
    except OSError as exc:
        print(f"cavsim: i/o error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except Exception as exc:  # keep the promised exit-code contract
        print(f"cavsim: error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())

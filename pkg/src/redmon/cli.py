"""Command line interface.

Subcommands:
  search    enumerate substitutions for a variable in a .kb file
  validate  structural checks on a .kb file
  generate  write the fault-free trace of a scenario as JSONL
  inject    write the scenario trace with faults applied
  replay    run the monitor over a scenario, write verdicts and summary
  report    render a verdicts file to CSV and PNG figures

Exit codes: 0 success, 1 usage error, 2 invalid input data.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import Optional, Sequence

from .dsl import KbParseError, parse_kb
from .harness import ScenarioError, load_scenario, replay, scenario_trace
from .kb import KbError, search_substitutions
from .monitor import MonitorError, MonitorSetupError
from .observation import ObservationError, TraceError, write_trace
from .report import ReportError, render_report

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> "NoReturn":  # noqa: F821
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _read_kb(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kb(fh.read())


def _cmd_search(args: argparse.Namespace) -> int:
    kb, _ = _read_kb(args.kb)
    if args.variable not in kb.variable_set:
        print(f"unknown variable {args.variable!r}", file=sys.stderr)
        return DATA_ERROR
    count = 0
    for sub in search_substitutions(kb, args.variable, max_depth=args.max_depth):
        count += 1
        print(sub.format())
    print(f"{count} substitution(s) for {args.variable}", file=sys.stderr)
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    kb, programs = _read_kb(args.kb)
    violations = kb.validate()
    for v in violations:
        print(f"{v.kind}: {v.subject}: {v.message}")
    missing = [r.id for r in kb.relations if r.id not in programs]
    for rid in missing:
        print(f"no-implementation: {rid}: relation declared without a body")
    if violations:
        return DATA_ERROR
    print(
        f"ok: {len(kb.variable_set)} variable(s), {len(kb.relations)} relation(s), "
        f"{len(kb.signals)} signal(s), {len(programs)} implementation(s)"
    )
    return 0


def _apply_overrides(scenario, args: argparse.Namespace):
    monitor = scenario.monitor
    updates = {}
    if getattr(args, "n_buf", None) is not None:
        updates["n_buf"] = args.n_buf
    if getattr(args, "period", None) is not None:
        updates["t_m"] = args.period
    if getattr(args, "filter", None) is not None:
        updates["filter"] = args.filter
    if updates:
        monitor = dataclasses.replace(monitor, **updates)
        scenario = dataclasses.replace(scenario, monitor=monitor)
    if getattr(args, "seed", None) is not None and scenario.generate is not None:
        scenario = dataclasses.replace(
            scenario, generate=dataclasses.replace(scenario.generate, seed=args.seed)
        )
    return scenario


def _cmd_generate(args: argparse.Namespace) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    scenario = dataclasses.replace(scenario, faults=())
    records = scenario_trace(scenario)
    if args.out:
        write_trace(args.out, records)
        print(f"wrote {len(records)} record(s) to {args.out}", file=sys.stderr)
    else:
        write_trace(sys.stdout, records)
    return 0


def _cmd_inject(args: argparse.Namespace) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    records = scenario_trace(scenario)
    if args.out:
        write_trace(args.out, records)
        print(f"wrote {len(records)} record(s) to {args.out}", file=sys.stderr)
    else:
        write_trace(sys.stdout, records)
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    overrides = {}
    if args.kb:
        with open(args.kb, "r", encoding="utf-8") as fh:
            overrides["kb_text"] = fh.read()
    if args.variable:
        overrides["variable"] = args.variable
    if args.verdicts:
        overrides["verdicts_out"] = args.verdicts
    if args.summary:
        overrides["summary_out"] = args.summary
    if overrides:
        scenario = dataclasses.replace(scenario, **overrides)
    result = replay(scenario)
    json.dump(result.summary, sys.stdout, indent=2, sort_keys=True)
    print()
    if scenario.verdicts_out:
        print(f"verdicts: {scenario.verdicts_out}", file=sys.stderr)
    if scenario.summary_out:
        print(f"summary: {scenario.summary_out}", file=sys.stderr)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    paths = render_report(args.verdicts, out_dir=args.out_dir, stem=args.stem)
    for name in ("csv", "outputs", "errors", "failed"):
        print(f"{name}: {paths[name]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="redmon",
        description="Fault detection through implicit redundancy of sensor signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="enumerate substitutions for a variable")
    p.add_argument("kb", help=".kb file")
    p.add_argument("variable", help="variable to provide")
    p.add_argument("--max-depth", type=int, default=10)
    p.set_defaults(fn=_cmd_search)

    p = sub.add_parser("validate", help="structural checks on a .kb file")
    p.add_argument("kb", help=".kb file")
    p.set_defaults(fn=_cmd_validate)

    for name, fn, help_text in (
        ("generate", _cmd_generate, "write the fault-free scenario trace"),
        ("inject", _cmd_inject, "write the scenario trace with faults applied"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", help="scenario YAML file")
        p.add_argument("--out", help="output JSONL path (default: stdout)")
        p.add_argument("--seed", type=int, help="override generator seed")
        p.set_defaults(fn=fn)

    p = sub.add_parser("replay", help="run the monitor over a scenario")
    p.add_argument("scenario", help="scenario YAML file")
    p.add_argument("--kb", help="override the scenario's knowledge base file")
    p.add_argument("--variable", help="override the monitored variable")
    p.add_argument("--verdicts", help="override verdicts output path")
    p.add_argument("--summary", help="override summary output path")
    p.add_argument("--n-buf", type=int, help="override buffer length")
    p.add_argument("--period", type=float, help="override monitor period")
    p.add_argument("--filter", choices=["none", "median", "mean"])
    p.add_argument("--seed", type=int, help="override generator seed")
    p.set_defaults(fn=_cmd_replay)

    p = sub.add_parser("report", help="render verdicts to CSV and figures")
    p.add_argument("verdicts", help="verdicts JSONL file")
    p.add_argument("--out-dir", help="directory for artifacts (default: alongside)")
    p.add_argument("--stem", help="artifact base name (default: input stem)")
    p.set_defaults(fn=_cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (
        KbError,
        KbParseError,
        ScenarioError,
        ObservationError,
        TraceError,
        MonitorError,
        MonitorSetupError,
        ReportError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()

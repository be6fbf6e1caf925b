"""``bugnav`` command line: run, compare, oracle, validate."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .engine import ConfigError, EngineParams, Outcome, RunReport, default_max_ticks, run_episode
from .reporting import (
    ErrorCell,
    atomic_write,
    compare_runs,
    format_table,
    render_svg,
    write_report,
    write_trace,
)
from .sensors import SENSOR_KINDS, SensorConfigError, SensorModel
from .simulator import ControlParams
from .variants import VARIANT_IDS, VariantParams, make_strategy
from .world import Scenario, ScenarioError, grid_reachable, random_world, read_scenario

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_TIMEOUT = 2
EXIT_CONFIG = 64

OUTCOME_EXIT = {Outcome.SUCCESS: EXIT_SUCCESS, Outcome.FAILURE: EXIT_FAILURE, Outcome.TIMEOUT: EXIT_TIMEOUT}
FIXTURES = Path(__file__).resolve().parent / "fixtures"
DEFAULT_ENVS = ("env1", "env2", "env3")
CONFIG_ERRORS = (ConfigError, SensorConfigError, ScenarioError, ValueError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 64 instead of argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def resolve_env(name: str) -> Path:
    """A scenario path, falling back to the bundled fixtures by file name."""
    p = Path(name)
    if p.exists():
        return p
    for cand in (FIXTURES / p.name, FIXTURES / f"{p.name}.json"):
        if cand.exists():
            return cand
    raise ScenarioError(f"no such scenario file: {name}")


def load_env(args: argparse.Namespace) -> Scenario:
    if getattr(args, "random_world", None) is not None:
        if args.random_world < 0:
            raise ScenarioError("--random-world needs a non-negative obstacle count")
        return random_world(args.seed, n_obstacles=args.random_world)
    if not args.env:
        raise ScenarioError("one of --env or --random-world is required")
    return read_scenario(resolve_env(args.env))


def build_sensor(scenario: Scenario, kind: str) -> SensorModel:
    return SensorModel.create(kind, scenario.sensor)


def run_cell(scenario: Scenario, variant: str, sensor: str, max_ticks: Optional[int] = None) -> RunReport:
    """One episode configured from the scenario's optional sections."""
    strategy = make_strategy(variant, VariantParams.from_mapping(scenario.variant))
    model = build_sensor(scenario, sensor)
    return run_episode(scenario, strategy, model, max_ticks, sensor_name=sensor)


def _cell_job(job: tuple[str, str, str, str, Optional[int]]):
    path, scen_id, variant, sensor, max_ticks = job
    try:
        scenario = read_scenario(path)
        return run_cell(scenario, variant, sensor, max_ticks)
    except CONFIG_ERRORS as exc:
        return ErrorCell(variant, sensor, scen_id, str(exc))


def _split(value: str, allowed: Sequence[str], label: str) -> list[str]:
    items = [v.strip() for v in value.split(",") if v.strip()]
    bad = [v for v in items if v not in allowed]
    if bad or not items:
        raise UsageError(f"unknown {label}: {', '.join(bad) or value!r}")
    return items


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_env(args)
        report = run_cell(scenario, args.variant, args.sensor, args.max_ticks)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        write_report(report, args.out)
    if args.trace:
        write_trace(report, args.trace)
    if args.svg:
        atomic_write(args.svg, render_svg(report, scenario).encode("utf-8"))
    print(
        f"{report.outcome.value} variant={report.variant} sensor={report.sensor} "
        f"ticks={report.ticks} path={report.total_path:.3f}m hits={len(report.hit_points)} "
        f"leaves={len(report.leave_points)}"
    )
    return OUTCOME_EXIT[report.outcome]


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        variants = _split(args.variants, VARIANT_IDS, "variant")
        sensors = _split(args.sensors, SENSOR_KINDS, "sensor")
        if args.envs:
            d = Path(args.envs)
            if not d.is_dir():
                raise UsageError(f"not a directory: {args.envs}")
            envs = sorted(d.glob("*.json"))
        else:
            envs = [FIXTURES / f"{e}.json" for e in DEFAULT_ENVS]
        if not envs:
            raise UsageError("no scenario files found")
        max_ticks = args.max_ticks if args.max_ticks is not None else default_max_ticks()
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    jobs = [(str(p), p.stem, v, s, max_ticks) for p in envs for v in variants for s in sensors]
    workers = args.jobs or os.cpu_count() or 1
    if workers == 1:
        results = [_cell_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_cell_job, jobs))
    table = format_table(compare_runs(results))
    atomic_write(args.out, table.encode("utf-8"))
    errors = sum(isinstance(r, ErrorCell) for r in results)
    print(f"{len(results)} rows ({errors} error) written to {args.out}")
    return EXIT_SUCCESS


def cmd_oracle(args: argparse.Namespace) -> int:
    try:
        scenario = load_env(args)
        ok = grid_reachable(scenario, args.cell)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print("reachable" if ok else "unreachable")
    return EXIT_SUCCESS if ok else EXIT_FAILURE


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        scenario = load_env(args)
        for kind in SENSOR_KINDS:
            build_sensor(scenario, kind)
        ControlParams.from_mapping(scenario.control)
        VariantParams.from_mapping(scenario.variant)
        EngineParams.from_mapping(scenario.engine)
    except CONFIG_ERRORS as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"valid: {scenario.name} ({len(scenario.obstacles)} obstacles)")
    return EXIT_SUCCESS


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return n


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _add_env(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--env", help="scenario JSON file (or a bundled fixture name)")
    g.add_argument("--random-world", type=int, metavar="N", help="generate a world with N obstacles")
    p.add_argument("--seed", type=int, default=0, help="seed for --random-world")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bugnav", description="Bug-family navigation workbench")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one episode")
    _add_env(p)
    p.add_argument("--variant", required=True, choices=VARIANT_IDS)
    p.add_argument("--sensor", required=True, choices=SENSOR_KINDS)
    p.add_argument("--out", help="JSON report file")
    p.add_argument("--trace", help="CSV trace file")
    p.add_argument("--svg", help="SVG figure file")
    p.add_argument("--max-ticks", type=_positive_int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run a variant x sensor x scenario batch")
    p.add_argument("--envs", help="directory of scenario JSON files (default: bundled env1-3)")
    p.add_argument("--variants", default=",".join(VARIANT_IDS))
    p.add_argument("--sensors", default="laser,ir")
    p.add_argument("--out", required=True, help="TSV table file")
    p.add_argument("--max-ticks", type=_positive_int)
    p.add_argument("--jobs", type=_positive_int, help="worker processes (default: CPU count)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="grid reachability of the goal")
    _add_env(p)
    p.add_argument("--cell", type=_positive_float, help="grid cell size in metres (default err/4)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("validate", help="check a scenario file")
    _add_env(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

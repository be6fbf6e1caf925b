"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line
that is printed in the terminal summary."""

import ast
import functools
import math
import sys
import time
from pathlib import Path

import pytest

import bugnav.engine
from bugnav.cli import main as cli_main
from bugnav.engine import EngineParams, Outcome
from bugnav.geometry import Bounds, Point, Pose, World, distance, on_m_line
from bugnav.reporting import trace_text
from bugnav.sensors import SensorModel
from bugnav.variants import VARIANT_IDS, VariantParams, distbug_leave
from bugnav.world import grid_reachable, random_world

from _support import fixture, rect, run
from conftest import ACCEPTANCE

SCANLESS_OK = ("bug1", "bug2", "alg1", "alg2", "rev1")
MAX_TICKS = 20000


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    assert ok, ACCEPTANCE[n]


def timed_run(sc, variant, sensor="laser"):
    t = time.perf_counter()
    rep = run(sc, variant, sensor, MAX_TICKS)
    return rep, time.perf_counter() - t


@functools.lru_cache(maxsize=None)
def env1_runs():
    sc = fixture("env1")
    return sc, [(v, *timed_run(sc, v)) for v in VARIANT_IDS]


@functools.lru_cache(maxsize=None)
def env2_runs():
    sc = fixture("env2")
    runs = [(v, "laser", run(sc, v, "laser", MAX_TICKS)) for v in VARIANT_IDS]
    runs += [(v, "ir", run(sc, v, "ir", MAX_TICKS)) for v in SCANLESS_OK]
    return sc, runs


@functools.lru_cache(maxsize=None)
def env3_runs():
    sc = fixture("env3")
    return sc, {v: run(sc, v, "laser", MAX_TICKS) for v in VARIANT_IDS}


@functools.lru_cache(maxsize=None)
def random_runs():
    t = time.perf_counter()
    out = []
    for seed in range(100):
        sc = random_world(seed)
        reachable = grid_reachable(sc)
        for v in VARIANT_IDS:
            out.append((sc, seed, v, reachable, run(sc, v, "laser", MAX_TICKS)))
    return out, time.perf_counter() - t


def test_criterion_1_sealed_goal_fails():
    sc, runs = env1_runs()
    bad = [v for v, rep, _ in runs if rep.outcome is not Outcome.FAILURE or rep.ticks > MAX_TICKS]
    slowest = max(t for _, _, t in runs)
    record(1, not bad and slowest < 10.0 and not grid_reachable(sc),
           f"env1 laser: {7 - len(bad)}/7 Failure, slowest episode {slowest:.2f} s")


def test_criterion_2_reachable_goal_succeeds():
    sc, runs = env2_runs()
    straight = distance(sc.start, sc.goal)
    bad = [
        f"{v}/{s}"
        for v, s, rep in runs
        if rep.outcome is not Outcome.SUCCESS
        or distance(rep.final_position, sc.goal) > sc.err
        or rep.total_path < straight
    ]
    record(2, not bad, f"env2: {len(runs) - len(bad)}/{len(runs)} Success (7 laser + 5 IR)"
           + (f"; failing {bad}" if bad else ""))


def test_criterion_3_single_reversal_on_trap():
    _, runs = env3_runs()
    detail = {v: (runs[v].outcome.value, runs[v].reversals) for v in ("alg1", "alg2")}
    ok = all(o == "Success" and r == 1 for o, r in detail.values())
    record(3, ok, f"env3: {detail}")


def test_criterion_4_oracle_equivalence():
    runs, elapsed = random_runs()
    violations = []
    for _, seed, v, reachable, rep in runs:
        success = rep.outcome is Outcome.SUCCESS
        if success != reachable or (rep.outcome is Outcome.FAILURE and reachable):
            violations.append((seed, v, rep.outcome.value, reachable))
    n_reach = sum(1 for r in runs if r[3]) // len(VARIANT_IDS)
    record(4, not violations and elapsed < 15 * 60,
           f"{len(runs)} episodes over 100 worlds ({n_reach} reachable): {len(violations)} violations, "
           f"{elapsed:.0f} s" + (f"; first {violations[:5]}" if violations else ""))


def test_criterion_5_clearance_positive():
    reps = [rep for _, rep, _ in env1_runs()[1]]
    reps += [rep for _, _, rep in env2_runs()[1]]
    reps += list(env3_runs()[1].values())
    reps += [r[4] for r in random_runs()[0]]
    worlds = [fixture("env1")] * 7 + [fixture("env2")] * 12 + [fixture("env3")] * 7 + [r[0] for r in random_runs()[0]]
    worst = math.inf
    for sc, rep in zip(worlds, reps):
        world = sc.world
        worst = min(worst, rep.min_clearance)
        assert all(not world.inside_obstacle(r.pose.position) for r in rep.trajectory[:: max(1, len(rep.trajectory) // 50)])
    record(5, worst > 0, f"{len(reps)} episodes, smallest clearance at any tick {worst:.4f} m")


def test_criterion_6_leave_point_invariants():
    episodes = [(fixture("env2"), v, rep) for v, s, rep in env2_runs()[1] if s == "laser"]
    sc3, r3 = env3_runs()
    episodes += [(sc3, v, rep) for v, rep in r3.items()]
    episodes += [(sc, v, rep) for sc, _, v, _, rep in random_runs()[0]]
    eps = VariantParams().mline_eps + 0.05
    problems = []
    for sc, v, rep in episodes:
        if v in ("bug2", "alg1", "rev1"):
            problems += [(v, sc.name, "off m-line") for q in rep.leave_points if not on_m_line(q, sc.start, sc.goal, eps)]
        if v in ("bug2", "alg1", "alg2", "distbug"):
            problems += [
                (v, sc.name, "not closer")
                for h, q in zip(rep.hit_points, rep.leave_points)
                if not distance(q, sc.goal) < distance(h, sc.goal)
            ]
    disc = fixture("disc")
    bug1 = run(disc, "bug1", "laser", MAX_TICKS)
    leave = bug1.leave_points[0] if bug1.leave_points else None
    # on the circle of radius 1 the point nearest (10, 0) is (1, 0)
    analytic = Point(1.0, 0.0)
    hit_tick = next(e.tick for e in bug1.events if e.kind == "hit")
    grant_tick = next(e.tick for e in bug1.events if e.kind == "grant")
    best_sample = min(distance(r.pose.position, disc.goal) for r in bug1.trajectory if hit_tick <= r.tick < grant_tick)
    bug1_ok = (
        bug1.outcome is Outcome.SUCCESS
        and leave is not None
        and distance(leave, analytic) <= 0.2
        and distance(leave, disc.goal) <= best_sample + 0.2
    )
    leave_txt = "none" if leave is None else f"({leave.x:.3f}, {leave.y:.3f})"
    record(6, not problems and bug1_ok,
           f"{len(episodes)} episodes checked, {len(problems)} problems; Bug1 disc leave {leave_txt}")


ENGINE_SRC = Path(bugnav.engine.__file__)


def engine_sensor_coupling(source: str) -> list[str]:
    """Engine may take only SensorView from the sensors module and must never
    read a sensor's kind."""
    tree = ast.parse(source)
    # loop variables over event logs carry an event kind, not a sensor kind
    event_vars = {
        n.target.id
        for n in ast.walk(tree)
        if isinstance(n, (ast.comprehension, ast.For))
        and isinstance(n.iter, ast.Attribute)
        and n.iter.attr == "events"
        and isinstance(n.target, ast.Name)
    }
    issues = []
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom) and node.module and node.module.endswith("sensors"):
            extra = {a.name for a in node.names} - {"SensorView"}
            if extra:
                issues.append(f"imports {sorted(extra)} from sensors")
        if isinstance(node, ast.Import) and any(a.name.endswith("sensors") for a in node.names):
            issues.append("imports the sensors module")
        if isinstance(node, ast.Attribute) and node.attr in ("kind", "cone_rays", "beams", "cone_deg"):
            if not (node.attr == "kind" and isinstance(node.value, ast.Name) and node.value.id in event_vars):
                issues.append(f"reads .{node.attr}")
        if isinstance(node, ast.Constant) and node.value in ("laser", "ir", "tactile"):
            issues.append(f"mentions sensor {node.value!r}")
    return issues


def engine_calls(sc, sensor):
    """Names of engine functions executed during one episode."""
    seen = set()
    target = str(ENGINE_SRC)

    def prof(frame, event, arg):
        if event == "call" and frame.f_code.co_filename == target:
            seen.add(frame.f_code.co_name)

    sys.setprofile(prof)
    try:
        rep = run(sc, "bug2", sensor, MAX_TICKS)
    finally:
        sys.setprofile(None)
    return rep, seen


def flat_wall_agreement() -> int:
    """Laser and IR booleans on flat walls perpendicular to the front, left
    or right axis; returns the number of mismatches."""
    mismatches = 0
    arena = Bounds(-20, -20, 20, 20)
    for dist in (0.1, 0.25, 0.3, 0.35, 0.6, 1.0, 1.9):
        for safe in (0.2, 0.3, 0.5):
            laser = SensorModel.create("laser", {"safe_distance": safe})
            ir = SensorModel.create("ir", {"safe_distance": safe})
            world = World((rect(dist, -10, dist + 1, 10),), arena)
            for heading in (0.0, math.pi / 2, -math.pi / 2):
                pose = Pose(Point(0, 0), heading)
                a, b = laser.sense(world, pose), ir.sense(world, pose)
                for fa, fb in (("obstacle_in_front",) * 2, ("obstacle_on_left",) * 2, ("obstacle_on_right",) * 2):
                    mismatches += getattr(a, fa)() != getattr(b, fb)()
    return mismatches


def test_criterion_7_decoupling():
    issues = engine_sensor_coupling(ENGINE_SRC.read_text())
    # the check itself must notice a planted dependency
    planted = "from .sensors import SensorView, SensorModel\ndef f(sensor):\n    return sensor.kind == 'laser'\n"
    assert len(engine_sensor_coupling(planted)) == 3
    sc = fixture("env2")
    laser_rep, laser_calls = engine_calls(sc, "laser")
    ir_rep, ir_calls = engine_calls(sc, "ir")
    both = laser_rep.outcome is Outcome.SUCCESS and ir_rep.outcome is Outcome.SUCCESS
    mismatches = flat_wall_agreement()
    ok = not issues and both and laser_calls == ir_calls and mismatches == 0
    record(7, ok,
           f"engine coupling issues {issues or 'none'}; bug2 env2 laser={laser_rep.outcome.value} "
           f"ir={ir_rep.outcome.value}; same engine functions {laser_calls == ir_calls}; "
           f"flat-wall mismatches {mismatches}")


def test_criterion_8_determinism(tmp_path):
    pairs = [("env2", "bug2", "laser"), ("env3", "alg1", "laser"), ("env3", "alg2", "ir"), ("disc", "tangentbug", "laser")]
    same_traces = all(
        trace_text(run(fixture(e), v, s)).encode() == trace_text(run(fixture(e), v, s)).encode()
        for e, v, s in pairs
    )
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    codes = (cli_main(["compare", "--out", str(a), "--jobs", "2"]), cli_main(["compare", "--out", str(b), "--jobs", "1"]))
    same_table = codes == (0, 0) and a.read_bytes() == b.read_bytes()
    record(8, same_traces and same_table,
           f"traces byte-identical {same_traces}; compare table byte-identical {same_table}")


def test_criterion_9_distbug_guard():
    fires = distbug_leave(5, 4, 1.5, 0.5)
    holds = not distbug_leave(5, 1, 1.5, 0.5)
    record(9, fires and holds, f"(5,4,1.5,0.5) leaves={fires}; (5,1,1.5,0.5) leaves={not holds}")

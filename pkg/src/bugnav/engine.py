"""The generic Bug algorithm as a template method.

The engine knows nothing about sensor hardware: it consumes a
:class:`~bugnav.sensors.SensorView` per tick and delegates every
variant-specific decision to a :class:`VariantStrategy`.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping, Optional

import numpy as np

from .geometry import Point, Pose, distance
from .sensors import SensorView
from .simulator import (
    STOP,
    Command,
    ControlParams,
    LostWall,
    RobotState,
    motion_to_goal,
    reacquire_command,
    step,
    wall_follow_command,
)
from .world import Scenario


class ConfigError(ValueError):
    """Bad episode configuration, detected before any simulation."""


class Mode(enum.Enum):
    MOTION_TO_GOAL = "M"
    BOUNDARY_FOLLOWING = "B"
    GOING_TO_LEAVE_POINT = "L"
    DONE = "D"


class Outcome(enum.Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"
    TIMEOUT = "Timeout"


class Directive(enum.Enum):
    REVERSE = "reverse"


DEFAULT_MAX_TICKS = 20000


def default_max_ticks() -> int:
    raw = os.environ.get("BUGNAV_MAX_TICKS")
    if raw is None or raw == "":
        return DEFAULT_MAX_TICKS
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"BUGNAV_MAX_TICKS must be an integer, got {raw!r}") from None
    if n <= 0:
        raise ConfigError("BUGNAV_MAX_TICKS must be > 0")
    return n


@dataclass(frozen=True)
class EngineParams:
    cycle_tol: float = 0.25
    min_loop_length: float = 1.0
    leave_arrival_tol: float = 0.15
    default_direction: bool = True
    # ticks allowed for turning around after a direction change
    realign_ticks: int = 10

    def __post_init__(self) -> None:
        for name in ("cycle_tol", "min_loop_length", "leave_arrival_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"engine parameter {name} must be > 0")

    @classmethod
    def from_mapping(cls, params: Mapping[str, Any] | None) -> "EngineParams":
        params = dict(params or {})
        unknown = sorted(set(params) - {f.name for f in fields(cls)})
        if unknown:
            raise ConfigError(f"unknown engine parameters: {', '.join(unknown)}")
        return cls(**params)


@dataclass(frozen=True)
class Event:
    tick: int
    kind: str  # hit | leave | reverse | grant
    point: Point


@dataclass(frozen=True)
class NavState:
    mode: Mode = Mode.MOTION_TO_GOAL
    outcome: Optional[Outcome] = None
    hit_points: tuple[Point, ...] = ()
    leave_points: tuple[Point, ...] = ()
    min_dist2goal: float = math.inf
    traveled_since_hit: float = 0.0
    direction: bool = True
    leave_point_found: bool = False
    candidate: Optional[Point] = None
    variant_data: Any = None
    # where the current loop is measured from; set once wall following settles
    loop_anchor: Optional[Point] = None
    # (x, y, heading, traveled) samples of the path since the anchor
    lap_marks: tuple[tuple[float, float, float, float], ...] = ()
    last_position: Optional[Point] = None
    goto_target: Optional[Point] = None
    goto_expected: float = 0.0
    goto_traveled: float = 0.0
    goto_best: float = math.inf
    realign: int = 0
    tick: int = 0
    events: tuple[Event, ...] = ()

    def __post_init__(self) -> None:
        if self.leave_point_found and self.candidate is None:
            raise ValueError("leave point found without a candidate")
        if (self.mode is Mode.DONE) != (self.outcome is not None):
            raise ValueError("Done carries an outcome and only Done does")

    @property
    def hit_point(self) -> Optional[Point]:
        return self.hit_points[-1] if self.hit_points else None

    @property
    def reversals(self) -> int:
        return sum(1 for e in self.events if e.kind == "reverse")

    def log(self, kind: str, point: Point) -> "NavState":
        return replace(self, events=self.events + (Event(self.tick, kind, point),))


@dataclass(frozen=True)
class Treatment:
    """Motion-to-goal override from a variant: either a steering command or a
    request to start boundary following now."""

    command: Optional[Command] = None
    begin_boundary: bool = False
    variant_data: Any = None


@dataclass(frozen=True)
class Context:
    """Per-episode constants handed to hooks."""

    start: Point
    goal: Point
    err: float
    engine: EngineParams
    control: ControlParams


class VariantStrategy:
    """Hook bundle. Defaults are no-ops; subclasses override what they need."""

    name = "generic"
    policy = "local"  # or "global"
    requires_scan = False

    def init_data(self, ctx: Context) -> Any:
        return None

    def set_hit_point(self, nav: NavState, view: SensorView, pose: Pose, ctx: Context) -> NavState:
        return nav

    def update_data(self, nav: NavState, view: SensorView, pose: Pose, ctx: Context) -> Any:
        return nav.variant_data

    def find_leave_point(
        self, nav: NavState, view: SensorView, pose: Pose, ctx: Context
    ) -> tuple[Any, Optional[Point]]:
        return nav.variant_data, None

    def is_leave_point_found(self, nav: NavState) -> bool:
        return nav.leave_point_found

    def go_to_leave_point(self, nav: NavState, pose: Pose, ctx: Context) -> tuple[Point, bool, float]:
        """Target, boundary direction to travel, and expected travel."""
        assert nav.candidate is not None
        return nav.candidate, nav.direction, distance(pose.position, nav.candidate)

    def encountered_points_condition(
        self, nav: NavState, pose: Pose, ctx: Context
    ) -> tuple[Any, Optional[Directive]]:
        return nav.variant_data, None

    def discontinuity_points_treatment(
        self, nav: NavState, view: SensorView, pose: Pose, ctx: Context
    ) -> Optional[Treatment]:
        return None


def goal_reached(pos: Point, goal: Point, err: float) -> bool:
    if not err > 0:
        raise ValueError("err must be > 0")
    return distance(pos, goal) <= err


def complete_cycle_around_obstacle(
    pos: Point, hit_point: Point, traveled: float, params: EngineParams = EngineParams()
) -> bool:
    if traveled < 0:
        raise ValueError("traveled distance must be ≥ 0")
    return distance(pos, hit_point) <= params.cycle_tol and traveled >= params.min_loop_length


MAX_LAP_MARKS = 2000


def loop_closure(nav: NavState, pose: Pose, params: EngineParams) -> Optional[float]:
    """Distance travelled (since the hit) at the lap mark the robot has come
    back to, or None if the loop is still open.

    A mark matches when the robot is within the cycle tolerance of it, heading
    the same way, and at least one minimum loop length further along."""
    if nav.loop_anchor is None or not nav.lap_marks:
        return None
    marks = np.asarray(nav.lap_marks)
    near = np.hypot(marks[:, 0] - pose.x, marks[:, 1] - pose.y) <= params.cycle_tol
    along = nav.traveled_since_hit - marks[:, 3] >= params.min_loop_length
    same_way = np.abs((marks[:, 2] - pose.heading + math.pi) % (2 * math.pi) - math.pi) <= math.pi / 4
    hit = np.flatnonzero(near & along & same_way)
    return float(marks[hit[0], 3]) if hit.size else None


def loop_closed(nav: NavState, pose: Pose, params: EngineParams) -> bool:
    return loop_closure(nav, pose, params) is not None


def _settled(view: SensorView, direction: bool) -> bool:
    side = view.right_distance if direction else view.left_distance
    safe = view.safe_distance
    front_clear = view.front_distance is None or view.front_distance > safe
    return front_clear and side is not None and abs(side - safe) <= 0.1 * safe + 0.02


def _anchor(nav: NavState, view: SensorView, pose: Pose, params: EngineParams) -> NavState:
    """Pin the loop anchor at the first settled wall-following pose, then keep
    dropping lap marks along the path.

    The hit point itself often sits off the steady wall-following path (at a
    corner, or closer than the safe distance), where later laps never pass
    within the cycle tolerance. Laps also differ slightly around sharp
    vertices, so closing on any earlier mark is more reliable than a single
    anchor."""
    mark = (pose.x, pose.y, pose.heading, nav.traveled_since_hit)
    if nav.loop_anchor is None:
        if _settled(view, nav.direction) or nav.traveled_since_hit >= 0.5 * params.min_loop_length:
            return replace(nav, loop_anchor=pose.position, lap_marks=(mark,))
        return nav
    if len(nav.lap_marks) < MAX_LAP_MARKS and nav.traveled_since_hit - nav.lap_marks[-1][3] >= 0.5 * params.cycle_tol:
        return replace(nav, lap_marks=nav.lap_marks + (mark,))
    return nav


def research_complete(strategy: VariantStrategy, nav: NavState, pose: Pose, params: EngineParams) -> bool:
    if strategy.policy == "global":
        return loop_closed(nav, pose, params)
    return strategy.is_leave_point_found(nav)


def _follow(nav: NavState, view: SensorView, ctx: Context) -> tuple[Command, NavState]:
    """Wall-following command with re-acquisition on a lost wall."""
    safe = view.safe_distance
    if nav.realign > 0:
        side = view.left_distance if not nav.direction else view.right_distance
        if side is None or side > ctx.control.capture_factor * safe:
            sign = 1.0 if nav.direction else -1.0
            front_blocked = view.front_distance is not None and view.front_distance <= safe
            if not front_blocked:
                return Command(0.0, -sign * ctx.control.omega_max), replace(nav, realign=nav.realign - 1)
        nav = replace(nav, realign=0)
    try:
        return wall_follow_command(view, nav.direction, safe, ctx.control), nav
    except LostWall:
        return reacquire_command(nav.direction, safe, ctx.control), nav


def _begin_boundary(
    strategy: VariantStrategy, nav: NavState, view: SensorView, pose: Pose, ctx: Context
) -> tuple[Command, NavState]:
    nav = replace(
        nav,
        mode=Mode.BOUNDARY_FOLLOWING,
        hit_points=nav.hit_points + (pose.position,),
        traveled_since_hit=0.0,
        direction=ctx.engine.default_direction,
        leave_point_found=False,
        candidate=None,
        loop_anchor=None,
        lap_marks=(),
        realign=0,
    )
    nav = strategy.set_hit_point(nav, view, pose, ctx).log("hit", pose.position)
    cmd, nav = _follow(nav, view, ctx)
    return cmd, nav


def identify_leave_point(
    strategy: VariantStrategy, nav: NavState, view: SensorView, pose: Pose, ctx: Context
) -> tuple[Command, NavState]:
    """updateData, then wall following, then findLeavePoint."""
    nav = replace(nav, variant_data=strategy.update_data(nav, view, pose, ctx))
    cmd, nav = _follow(nav, view, ctx)
    vd, cand = strategy.find_leave_point(nav, view, pose, ctx)
    nav = replace(nav, variant_data=vd)
    if cand is not None:
        nav = replace(nav, leave_point_found=True, candidate=cand)
    return cmd, nav


def try_to_leave(
    strategy: VariantStrategy, nav: NavState, pose: Pose, ctx: Context
) -> tuple[bool, NavState]:
    vd, directive = strategy.encountered_points_condition(nav, pose, ctx)
    nav = replace(nav, variant_data=vd)
    if directive is Directive.REVERSE:
        nav = replace(
            nav,
            direction=not nav.direction,
            loop_anchor=None,
            lap_marks=(),
            traveled_since_hit=0.0,
            realign=ctx.engine.realign_ticks,
        ).log("reverse", pose.position)
        return False, nav
    grant = strategy.is_leave_point_found(nav) and research_complete(strategy, nav, pose, ctx.engine)
    return grant, nav


def tick_template(
    strategy: VariantStrategy, nav: NavState, view: SensorView, pose: Pose, ctx: Context
) -> tuple[Command, NavState]:
    """One decision of the generic algorithm. Branch order is fixed:
    goal reached, going to leave point, new hit, boundary following,
    motion to goal."""
    if nav.mode is Mode.DONE:
        raise ValueError("episode already finished")
    pos = pose.position
    if nav.last_position is not None and nav.mode in (Mode.BOUNDARY_FOLLOWING, Mode.GOING_TO_LEAVE_POINT):
        moved = distance(nav.last_position, pos)
        nav = replace(
            nav,
            traveled_since_hit=nav.traveled_since_hit + moved,
            goto_traveled=nav.goto_traveled + moved if nav.mode is Mode.GOING_TO_LEAVE_POINT else 0.0,
        )
    cmd, nav = _decide(strategy, nav, view, pose, ctx)
    d = distance(pos, ctx.goal)
    return cmd, replace(nav, last_position=pos, min_dist2goal=min(nav.min_dist2goal, d), tick=nav.tick + 1)


def _decide(
    strategy: VariantStrategy, nav: NavState, view: SensorView, pose: Pose, ctx: Context
) -> tuple[Command, NavState]:
    pos = pose.position
    # (1) goal reached
    if goal_reached(pos, ctx.goal, ctx.err):
        return STOP, replace(nav, mode=Mode.DONE, outcome=Outcome.SUCCESS)

    # (2) travelling along the boundary to the chosen leave point
    if nav.mode is Mode.GOING_TO_LEAVE_POINT:
        assert nav.goto_target is not None
        d = distance(pos, nav.goto_target)
        tol = ctx.engine.leave_arrival_tol
        arrived = (
            d <= tol / 3
            or (d <= tol and d > nav.goto_best)
            or (nav.goto_best <= 3 * tol and d > nav.goto_best + tol)
            or nav.goto_traveled > 2 * nav.goto_expected + 2.0
        )
        if arrived:
            nav = replace(
                nav,
                mode=Mode.MOTION_TO_GOAL,
                leave_points=nav.leave_points + (pos,),
                goto_target=None,
                goto_best=math.inf,
                leave_point_found=False,
                candidate=None,
            ).log("leave", pos)
            # face the goal, unless the variant already steers somewhere safer
            treatment = strategy.discontinuity_points_treatment(nav, view, pose, ctx)
            if treatment is not None:
                nav = replace(nav, variant_data=treatment.variant_data)
                if treatment.command is not None:
                    return treatment.command, nav
            return motion_to_goal(pose, ctx.goal, ctx.control), nav
        cmd, nav = _follow(replace(nav, goto_best=min(nav.goto_best, d)), view, ctx)
        return cmd, nav

    # (3) new hit while moving to the goal
    if nav.mode is Mode.MOTION_TO_GOAL:
        treatment = strategy.discontinuity_points_treatment(nav, view, pose, ctx)
        if treatment is not None:
            nav = replace(nav, variant_data=treatment.variant_data)
        if view.obstacle_in_front() or (treatment is not None and treatment.begin_boundary):
            return _begin_boundary(strategy, nav, view, pose, ctx)
        # (5) motion to goal, possibly steered by the variant
        if treatment is not None and treatment.command is not None:
            return treatment.command, nav
        return motion_to_goal(pose, ctx.goal, ctx.control), nav

    # (4) boundary following
    nav = _anchor(nav, view, pose, ctx.engine)
    cmd, nav = identify_leave_point(strategy, nav, view, pose, ctx)
    grant, nav = try_to_leave(strategy, nav, pose, ctx)
    if grant:
        target, direction, expected = strategy.go_to_leave_point(nav, pose, ctx)
        turned = direction != nav.direction
        nav = replace(
            nav,
            mode=Mode.GOING_TO_LEAVE_POINT,
            goto_target=target,
            goto_expected=expected,
            goto_traveled=0.0,
            goto_best=distance(pos, target),
            direction=direction,
            realign=ctx.engine.realign_ticks if turned else 0,
        ).log("grant", pos)
        return STOP, nav
    if loop_closed(nav, pose, ctx.engine) and not nav.leave_point_found:
        return STOP, replace(nav, mode=Mode.DONE, outcome=Outcome.FAILURE)
    return cmd, nav


@dataclass(frozen=True)
class TraceRow:
    tick: int
    pose: Pose
    mode: Mode


@dataclass(frozen=True)
class RunReport:
    outcome: Outcome
    trajectory: tuple[TraceRow, ...]
    hit_points: tuple[Point, ...]
    leave_points: tuple[Point, ...]
    events: tuple[Event, ...]
    total_path: float
    ticks: int
    min_clearance: float
    leg_lengths: tuple[float, ...]
    variant: str
    sensor: str
    scenario: str
    config: Mapping[str, Any] = field(default_factory=dict)

    @property
    def final_position(self) -> Point:
        return self.trajectory[-1].pose.position

    @property
    def reversals(self) -> int:
        return sum(1 for e in self.events if e.kind == "reverse")


def run_episode(
    scenario: Scenario,
    strategy: VariantStrategy,
    sensor: Any,
    max_ticks: Optional[int] = None,
    *,
    engine: Optional[EngineParams] = None,
    control: Optional[ControlParams] = None,
    sensor_name: str = "",
) -> RunReport:
    """Run one episode to Success, Failure or Timeout.

    ``sensor`` is anything with ``provides_scan`` and ``sense(world, pose)``.
    """
    from .reporting import compute_metrics

    if max_ticks is None:
        max_ticks = default_max_ticks()
    if not (isinstance(max_ticks, int) and max_ticks > 0):
        raise ConfigError("max_ticks must be a positive integer")
    if strategy.requires_scan and not sensor.provides_scan:
        raise ConfigError("variant requires distance sensing")
    engine = engine or EngineParams.from_mapping(scenario.engine)
    control = control or ControlParams.from_mapping(scenario.control)
    ctx = Context(scenario.start, scenario.goal, scenario.err, engine, control)
    world = scenario.world

    heading = math.atan2(scenario.goal.y - scenario.start.y, scenario.goal.x - scenario.start.x)
    state = RobotState(Pose(scenario.start, heading))
    nav = NavState(
        direction=engine.default_direction,
        variant_data=strategy.init_data(ctx),
        min_dist2goal=distance(scenario.start, scenario.goal),
    )
    rows: list[TraceRow] = []
    while True:
        if state.tick >= max_ticks:
            nav = replace(nav, mode=Mode.DONE, outcome=Outcome.TIMEOUT)
            rows.append(TraceRow(state.tick, state.pose, nav.mode))
            break
        view = sensor.sense(world, state.pose)
        cmd, nav = tick_template(strategy, nav, view, state.pose, ctx)
        rows.append(TraceRow(state.tick, state.pose, nav.mode))
        if nav.mode is Mode.DONE:
            break
        state = step(world, state, cmd, control.dt, control)
        if world.inside_obstacle(state.position):
            raise AssertionError(f"robot inside obstacle at tick {state.tick}")

    assert nav.outcome is not None
    total, clearance, legs = compute_metrics(rows, scenario, nav.events)
    if not math.isclose(total, state.odometer, abs_tol=1e-6):
        raise AssertionError("odometer and trajectory length disagree")
    return RunReport(
        outcome=nav.outcome,
        trajectory=tuple(rows),
        hit_points=nav.hit_points,
        leave_points=nav.leave_points,
        events=nav.events,
        total_path=total,
        ticks=state.tick,
        min_clearance=clearance,
        leg_lengths=legs,
        variant=strategy.name,
        sensor=sensor_name or getattr(sensor, "name", ""),
        scenario=scenario.name,
        config={"max_ticks": max_ticks, "engine": _params(engine), "control": _params(control)},
    )


def _params(obj: Any) -> dict[str, Any]:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


__all__ = [
    "ConfigError",
    "Context",
    "DEFAULT_MAX_TICKS",
    "Directive",
    "EngineParams",
    "Event",
    "Mode",
    "NavState",
    "Outcome",
    "RunReport",
    "TraceRow",
    "Treatment",
    "VariantStrategy",
    "complete_cycle_around_obstacle",
    "goal_reached",
    "identify_leave_point",
    "loop_closed",
    "loop_closure",
    "research_complete",
    "run_episode",
    "tick_template",
    "try_to_leave",
]

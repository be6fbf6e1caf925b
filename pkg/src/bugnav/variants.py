"""The seven Bug variants, each expressed as a set of engine hooks."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Any, Mapping, Optional

import numpy as np

from .engine import (
    ConfigError,
    Context,
    Directive,
    NavState,
    Treatment,
    VariantStrategy,
    loop_closed,
    loop_closure,
)
from .geometry import Point, Pose, distance, m_line_offset, normalize_angle, on_m_line, point_segment_distance
from .sensors import SensorView, discontinuity_points
from .simulator import pursue_point

VARIANT_IDS = ("bug1", "bug2", "alg1", "alg2", "distbug", "tangentbug", "rev1")


@dataclass(frozen=True)
class VariantParams:
    step: float = 0.5
    mline_eps: float = 0.1
    hysteresis: float = 0.05
    encounter_tol: float = 0.2
    # goal direction must point at least this far (cosine) away from the wall
    clear_margin: float = 0.1
    # TangentBug: heuristic slack before declaring a local minimum
    tangent_tol: float = 0.3
    # TangentBug: lateral offset of the steering target, in safe distances
    tangent_offset: float = 1.5
    # TangentBug: scan hits within this radius count as the followed obstacle
    follow_radius: float = 1.0
    # TangentBug: a detour starts only for returns this far inside the range
    horizon_margin: float = 1.0
    jump_threshold: float = 0.5

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"variant parameter {f.name} must be > 0")

    @classmethod
    def from_mapping(cls, params: Mapping[str, Any] | None) -> "VariantParams":
        params = dict(params or {})
        unknown = sorted(set(params) - {f.name for f in fields(cls)})
        if unknown:
            raise ConfigError(f"unknown variant parameters: {', '.join(unknown)}")
        return cls(**params)


def _d_goal(pose: Pose, ctx: Context) -> float:
    return distance(pose.position, ctx.goal)


def _d_hit(nav: NavState, ctx: Context) -> float:
    assert nav.hit_point is not None
    return distance(nav.hit_point, ctx.goal)


def goal_direction_clear(view: SensorView, pose: Pose, goal: Point, direction: bool, margin: float) -> bool:
    """Heading for the goal would move away from the followed wall, and the
    scan (when there is one) shows room in that direction."""
    b = pose.bearing_to(goal)
    normal = view.right_bearing if direction else view.left_bearing
    if normal is None:
        normal = -math.pi / 2 if direction else math.pi / 2
    if math.cos(normalize_angle(b - normal)) > -margin:
        return False
    if view.front_distance is not None and view.front_distance <= view.safe_distance and abs(b) < math.pi / 2:
        return False
    free = view.free_range(b)
    if free is not None and free < min(distance(pose.position, goal), 2 * view.safe_distance):
        return False
    return True


class _Base(VariantStrategy):
    def __init__(self, params: VariantParams = VariantParams()):
        self.params = params

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params})"


# closest-point condition, global decision


@dataclass(frozen=True)
class Bug1Data:
    best_d: float = math.inf
    best_point: Optional[Point] = None
    best_arc: float = 0.0


class Bug1(_Base):
    name = "bug1"
    policy = "global"

    def init_data(self, ctx):
        return Bug1Data()

    def set_hit_point(self, nav, view, pose, ctx):
        return replace(nav, variant_data=Bug1Data(_d_goal(pose, ctx), pose.position, 0.0))

    def update_data(self, nav, view, pose, ctx):
        vd: Bug1Data = nav.variant_data
        d = _d_goal(pose, ctx)
        if d < vd.best_d:
            return Bug1Data(d, pose.position, nav.traveled_since_hit)
        return vd

    def find_leave_point(self, nav, view, pose, ctx):
        vd: Bug1Data = nav.variant_data
        if loop_closed(nav, pose, ctx.engine) and vd.best_d < _d_hit(nav, ctx) - self.params.hysteresis:
            return vd, vd.best_point
        return vd, None

    def go_to_leave_point(self, nav, pose, ctx):
        vd: Bug1Data = nav.variant_data
        assert vd.best_point is not None
        # the robot is back at the mark travelled ``start`` into the loop
        start = loop_closure(nav, pose, ctx.engine)
        if start is None:
            start = 0.0
        loop = max(nav.traveled_since_hit - start, 1e-9)
        ahead = (vd.best_arc - start) % loop
        back = loop - ahead
        if ahead <= back:
            return vd.best_point, nav.direction, ahead
        return vd.best_point, not nav.direction, back


# m-line condition


class Bug2(_Base):
    name = "bug2"

    def find_leave_point(self, nav, view, pose, ctx):
        p = self.params
        if (
            on_m_line(pose.position, ctx.start, ctx.goal, p.mline_eps)
            and _d_goal(pose, ctx) < _d_hit(nav, ctx) - p.hysteresis
            and goal_direction_clear(view, pose, ctx.goal, nav.direction, p.clear_margin)
        ):
            return nav.variant_data, pose.position
        return nav.variant_data, None


@dataclass(frozen=True)
class EncounterData:
    armed: frozenset = frozenset()
    reversed: bool = False
    # closest approach to the goal before the current hit
    d_ref: float = math.inf


def _encounter(params: VariantParams, nav: NavState, pose: Pose) -> tuple[EncounterData, Optional[Directive]]:
    """Reverse once per hit point on coming back to an earlier hit or leave
    point. A point only counts after the robot has been clearly away from it."""
    vd: EncounterData = nav.variant_data
    tol = params.encounter_tol
    recorded = nav.hit_points[:-1] + nav.leave_points
    armed = set(vd.armed)
    directive = None
    for i, q in enumerate(recorded):
        d = distance(pose.position, q)
        if d > 2 * tol:
            armed.add(i)
        elif d <= tol and i in armed and not vd.reversed and directive is None:
            directive = Directive.REVERSE
    return replace(vd, armed=frozenset(armed), reversed=vd.reversed or directive is not None), directive


class Alg1(Bug2):
    name = "alg1"

    def init_data(self, ctx):
        return EncounterData()

    def set_hit_point(self, nav, view, pose, ctx):
        return replace(nav, variant_data=EncounterData())

    def encountered_points_condition(self, nav, pose, ctx):
        return _encounter(self.params, nav, pose)


class Alg2(_Base):
    name = "alg2"

    def init_data(self, ctx):
        return EncounterData()

    def set_hit_point(self, nav, view, pose, ctx):
        return replace(nav, variant_data=EncounterData(d_ref=min(nav.min_dist2goal, _d_goal(pose, ctx))))

    def find_leave_point(self, nav, view, pose, ctx):
        p = self.params
        vd: EncounterData = nav.variant_data
        d = _d_goal(pose, ctx)
        # strictly closer than ever, and clearly closer than before this hit
        if d < nav.min_dist2goal and d < vd.d_ref - p.hysteresis and goal_direction_clear(
            view, pose, ctx.goal, nav.direction, p.clear_margin
        ):
            return nav.variant_data, pose.position
        return nav.variant_data, None

    def encountered_points_condition(self, nav, pose, ctx):
        return _encounter(self.params, nav, pose)


# step method


def distbug_leave(d: float, free: float, min_dist2goal: float, step: float) -> bool:
    """Leave when the free range toward the goal brings the robot ``step``
    closer than anything visited so far."""
    return d - free <= min_dist2goal - step


class DistBug(_Base):
    name = "distbug"
    requires_scan = True

    def find_leave_point(self, nav, view, pose, ctx):
        p = self.params
        d = _d_goal(pose, ctx)
        free = view.free_range(pose.bearing_to(ctx.goal))
        if free is None:
            free = 0.0
        if (
            distbug_leave(d, free, nav.min_dist2goal, p.step)
            and d < _d_hit(nav, ctx) - p.hysteresis
            and goal_direction_clear(view, pose, ctx.goal, nav.direction, p.clear_margin)
        ):
            return nav.variant_data, pose.position
        return nav.variant_data, None


# local-minimum condition


@dataclass(frozen=True)
class TangentData:
    best_h: float = math.inf
    d_followed: float = math.inf
    # side the current detour passes the obstacle on (True: obstacle on the right)
    side: Optional[bool] = None
    # committed world-frame point motion to goal is heading for
    target: Optional[Point] = None


def heuristic_target(points: list[Point], position: Point, goal: Point) -> tuple[int, float]:
    """Index and value of the discontinuity point minimising
    d(position, O) + d(O, goal)."""
    costs = [distance(position, o) + distance(o, goal) for o in points]
    i = int(np.argmin(costs))
    return i, costs[i]


def corridor_blocked(scan, pose: Pose, goal: Point, width: float, horizon: float = math.inf) -> bool:
    """Whether any scan return closer than ``horizon`` and ahead of the robot
    lies within ``width`` of the segment from the robot to the goal."""
    hit = ~np.isnan(scan.ranges) & (scan.ranges < horizon)
    if not hit.any():
        return False
    ang = pose.heading + scan.angles[hit]
    px = scan.ranges[hit] * np.cos(ang)
    py = scan.ranges[hit] * np.sin(ang)
    gx, gy = goal.x - pose.x, goal.y - pose.y
    den = gx * gx + gy * gy
    if den <= 1e-18:
        return False
    t = (px * gx + py * gy) / den
    ahead = t > 0.0
    t = np.minimum(t, 1.0)
    return bool(np.any(ahead & (np.hypot(px - t * gx, py - t * gy) < width)))


def free_lengths(scan, width: float) -> np.ndarray:
    """Per beam, how far a corridor of half-width ``width`` along it stays
    clear of every scan return."""
    hit = ~np.isnan(scan.ranges)
    lengths = np.full(scan.angles.shape, float(scan.max_range))
    if not hit.any():
        return lengths
    px = scan.ranges[hit] * np.cos(scan.angles[hit])
    py = scan.ranges[hit] * np.sin(scan.angles[hit])
    ux, uy = np.cos(scan.angles)[:, None], np.sin(scan.angles)[:, None]
    t = ux * px + uy * py
    lat = np.abs(ux * py - uy * px)
    t = np.where((t > 0) & (lat < width), t, np.inf)
    return np.minimum(lengths, t.min(axis=1))


def reach_point(view: SensorView, pose: Pose, goal: Point) -> tuple[float, Optional[Point]]:
    """Closest approach to the goal over the free corridors of the scan, each
    shortened by the safe distance, and the point where it happens."""
    scan = view.scan
    assert scan is not None
    length = free_lengths(scan, 0.5 * view.safe_distance) - view.safe_distance
    ok = length > 0
    if not ok.any():
        return math.inf, None
    ang = pose.heading + scan.angles[ok]
    ux, uy = np.cos(ang), np.sin(ang)
    gx, gy = goal.x - pose.x, goal.y - pose.y
    t = np.clip(gx * ux + gy * uy, 0.0, length[ok])
    d = np.hypot(gx - t * ux, gy - t * uy)
    i = int(np.argmin(d))
    return float(d[i]), Point(pose.x + float(t[i] * ux[i]), pose.y + float(t[i] * uy[i]))


def sweep_clear(
    view: SensorView, bearing: float, window: float = 15.0 * math.pi / 180, margin: float = 1.25
) -> bool:
    """Turning in place to ``bearing`` keeps the front window clear of
    obstacles, with some slack on both the window and the safe distance."""
    scan = view.scan
    assert scan is not None
    lo, hi = min(0.0, bearing) - window, max(0.0, bearing) + window
    sel = (scan.angles >= lo - 1e-9) & (scan.angles <= hi + 1e-9)
    r = scan.ranges[sel]
    return not bool(np.any(~np.isnan(r) & (r <= margin * view.safe_distance)))


class TangentBug(_Base):
    name = "tangentbug"
    requires_scan = True

    def init_data(self, ctx):
        return TangentData()

    def _scan(self, view):
        if view.scan is None:
            raise ConfigError("variant requires distance sensing")
        return view.scan

    def _detour(self, view, pose, ctx, side):
        """Offset discontinuity point to head for, whether it passes the
        obstacle on the left, and its heuristic value; None if none visible."""
        pts = discontinuity_points(self._scan(view), pose, self.params.jump_threshold)
        if not pts:
            return None
        b = pose.bearing_to(ctx.goal)
        sides = [normalize_angle(pose.bearing_to(o) - b) > 0 for o in pts]
        i, h = heuristic_target(pts, pose.position, ctx.goal)
        if side is not None and sides[i] != side:
            # keep going round the same side unless the other is clearly better
            same = [k for k, sd in enumerate(sides) if sd == side]
            if same:
                j, hj = heuristic_target([pts[k] for k in same], pose.position, ctx.goal)
                if hj <= h + self.params.tangent_tol:
                    i, h = same[j], hj
        o, left = pts[i], sides[i]
        ang = math.atan2(o.y - pose.y, o.x - pose.x) + (math.pi / 2 if left else -math.pi / 2)
        off = self.params.tangent_offset * view.safe_distance
        return Point(o.x + off * math.cos(ang), o.y + off * math.sin(ang)), left, h

    def discontinuity_points_treatment(self, nav, view, pose, ctx):
        vd: TangentData = nav.variant_data
        scan = self._scan(view)
        width = 0.5 * view.safe_distance
        # the whole goal corridor beyond the safe distance must be inside the fan
        half = float(np.max(np.abs(scan.angles))) - math.asin(min(1.0, width / view.safe_distance))
        in_fan = abs(pose.bearing_to(ctx.goal)) <= half
        if vd.target is not None:
            reached = distance(pose.position, vd.target) <= max(0.5 * view.safe_distance, 0.15)
            if not reached and not (in_fan and not corridor_blocked(scan, pose, ctx.goal, 1.5 * width)):
                return Treatment(pursue_point(pose, vd.target, ctx.control), False, vd)
            vd = replace(vd, target=None)
        horizon = scan.max_range - self.params.horizon_margin
        if not in_fan or not corridor_blocked(scan, pose, ctx.goal, width, horizon):
            return Treatment(None, False, replace(vd, best_h=min(vd.best_h, _d_goal(pose, ctx))))
        detour = self._detour(view, pose, ctx, vd.side)
        if detour is None:
            return Treatment(None, False, vd)
        target, left, h = detour
        vd = replace(vd, side=left)
        ranges = scan.ranges
        if h > vd.best_h + self.params.tangent_tol and np.any(ranges[~np.isnan(ranges)] <= 2 * view.safe_distance):
            # local minimum: follow the obstacle on the side it is on
            k = int(np.nanargmin(ranges))
            return Treatment(None, True, replace(vd, side=bool(scan.angles[k] < 0)))
        vd = replace(vd, best_h=min(vd.best_h, h), target=target)
        return Treatment(pursue_point(pose, target, ctx.control), False, vd)

    def set_hit_point(self, nav, view, pose, ctx):
        vd: TangentData = nav.variant_data
        direction = vd.side if vd.side is not None else nav.direction
        vd = replace(vd, d_followed=min(vd.d_followed, _d_goal(pose, ctx)), target=None)
        return replace(nav, direction=direction, variant_data=vd)

    def update_data(self, nav, view, pose, ctx):
        vd: TangentData = nav.variant_data
        scan = self._scan(view)
        hit = ~np.isnan(scan.ranges) & (scan.ranges <= self.params.follow_radius)
        if hit.any():
            ang = pose.heading + scan.angles[hit]
            r = scan.ranges[hit]
            xs = pose.x + r * np.cos(ang) - ctx.goal.x
            ys = pose.y + r * np.sin(ang) - ctx.goal.y
            vd = replace(vd, d_followed=min(vd.d_followed, float(np.min(np.hypot(xs, ys)))))
        return vd

    def find_leave_point(self, nav, view, pose, ctx):
        vd: TangentData = nav.variant_data
        d_reach, t = reach_point(view, pose, ctx.goal)
        if t is None or d_reach >= vd.d_followed - self.params.hysteresis:
            return vd, None
        if distance(pose.position, t) < view.safe_distance or not sweep_clear(view, pose.bearing_to(t)):
            return vd, None
        # motion to goal first heads for the reach point, keeping to the same side
        return replace(vd, best_h=math.inf, side=nav.direction, target=t), pose.position


# m-line condition with side-dependent direction


@dataclass(frozen=True)
class Rev1Data:
    on_line: bool = True
    reversed: bool = False


class Rev1(Bug2):
    name = "rev1"

    def init_data(self, ctx):
        return Rev1Data()

    def set_hit_point(self, nav, view, pose, ctx):
        off = m_line_offset(pose.position, ctx.start, ctx.goal)
        eps = self.params.mline_eps
        direction = True if off > eps else False if off < -eps else nav.direction
        return replace(nav, direction=direction, variant_data=Rev1Data())

    def encountered_points_condition(self, nav, pose, ctx):
        vd: Rev1Data = nav.variant_data
        on = on_m_line(pose.position, ctx.start, ctx.goal, self.params.mline_eps)
        entering = on and not vd.on_line
        farther = _d_goal(pose, ctx) > _d_hit(nav, ctx) + self.params.hysteresis
        if entering and farther and not vd.reversed:
            return Rev1Data(True, True), Directive.REVERSE
        return replace(vd, on_line=on), None


_REGISTRY = {
    "bug1": Bug1,
    "bug2": Bug2,
    "alg1": Alg1,
    "alg2": Alg2,
    "distbug": DistBug,
    "tangentbug": TangentBug,
    "rev1": Rev1,
}


def make_strategy(variant: str, params: VariantParams | Mapping[str, Any] | None = None) -> VariantStrategy:
    if variant not in _REGISTRY:
        raise ConfigError(f"unknown variant {variant!r}")
    if not isinstance(params, VariantParams):
        params = VariantParams.from_mapping(params)
    return _REGISTRY[variant](params)


def bug1_strategy(params=None):
    return make_strategy("bug1", params)


def bug2_strategy(params=None):
    return make_strategy("bug2", params)


def alg1_strategy(params=None):
    return make_strategy("alg1", params)


def alg2_strategy(params=None):
    return make_strategy("alg2", params)


def distbug_strategy(params=None):
    return make_strategy("distbug", params)


def tangentbug_strategy(params=None):
    return make_strategy("tangentbug", params)


def rev1_strategy(params=None):
    return make_strategy("rev1", params)

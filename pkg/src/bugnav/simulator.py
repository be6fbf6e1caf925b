"""Fixed-step point-robot kinematics and the low-level motion behaviours."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Any, Mapping

import numpy as np

from .geometry import Point, Pose, World, distance, normalize_angle
from .sensors import SensorView


class LostWall(RuntimeError):
    """Wall following has nothing to follow in any relevant window."""


@dataclass(frozen=True)
class ControlParams:
    dt: float = 0.5
    substep: float = 0.02
    v_max: float = 0.2
    omega_max: float = 1.0
    align_tolerance: float = 0.1
    steer_gain: float = 2.0
    v_follow: float = 0.15
    side_gain: float = 1.5
    heading_gain: float = 1.0
    # side readings farther than capture_factor * safe_distance are not "the wall"
    capture_factor: float = 3.0
    clearance_margin: float = 1e-4

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"control parameter {f.name} must be > 0")

    @classmethod
    def from_mapping(cls, params: Mapping[str, Any] | None) -> "ControlParams":
        params = dict(params or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(params) - known)
        if unknown:
            raise ValueError(f"unknown control parameters: {', '.join(unknown)}")
        return cls(**params)


@dataclass(frozen=True)
class Command:
    linear: float = 0.0
    angular: float = 0.0


STOP = Command(0.0, 0.0)


@dataclass(frozen=True)
class RobotState:
    pose: Pose
    tick: int = 0
    odometer: float = 0.0
    blocked: bool = False

    @property
    def position(self) -> Point:
        return self.pose.position


def _clamp(v: float, lim: float) -> float:
    return max(-lim, min(lim, v))


def face_goal(
    pose: Pose, goal: Point, params: ControlParams = ControlParams(), speed: float | None = None
) -> Command:
    """Proportional heading control; drives only once roughly aligned."""
    if distance(pose.position, goal) <= 1e-12:
        return STOP
    err = pose.bearing_to(goal)
    angular = _clamp(params.steer_gain * err, params.omega_max)
    linear = (params.v_max if speed is None else speed) if abs(err) < params.align_tolerance else 0.0
    return Command(linear, angular)


def motion_to_goal(pose: Pose, goal: Point, params: ControlParams = ControlParams()) -> Command:
    return face_goal(pose, goal, params, params.v_max)


def pursue_point(pose: Pose, target: Point, params: ControlParams = ControlParams()) -> Command:
    return face_goal(pose, target, params, params.v_max)


def wall_follow_command(
    view: SensorView, direction: bool, safe_distance: float, params: ControlParams = ControlParams()
) -> Command:
    """One tick of wall following.

    ``direction`` True keeps the wall on the robot's right, False on its left.
    Blocked ahead: turn in place away from the wall. Otherwise steer on the
    side distance error plus the wall's apparent tilt.
    """
    sign = 1.0 if direction else -1.0
    if view.front_distance is not None and view.front_distance <= safe_distance:
        return Command(0.0, sign * params.omega_max)
    side = view.right_distance if direction else view.left_distance
    bearing = view.right_bearing if direction else view.left_bearing
    if side is None or side > params.capture_factor * safe_distance:
        raise LostWall("lost wall")
    # positive tilt: heading into the wall
    tilt = 0.0 if bearing is None else sign * bearing + math.pi / 2
    turn = params.heading_gain * tilt - params.side_gain * (side - safe_distance)
    return Command(params.v_follow, _clamp(sign * turn, params.omega_max))


def reacquire_command(
    direction: bool, safe_distance: float, params: ControlParams = ControlParams()
) -> Command:
    """Arc toward the followed side to find the wall again."""
    sign = 1.0 if direction else -1.0
    v = params.v_follow
    return Command(v, _clamp(-sign * v / safe_distance, params.omega_max))


def _blocked_at(world: World, p0: np.ndarray, pts: np.ndarray, margin: float) -> int:
    """Index of the first sub-step that is illegal, or len(pts)."""
    b = world.bounds
    inb = (pts[:, 0] > b.xmin) & (pts[:, 0] < b.xmax) & (pts[:, 1] > b.ymin) & (pts[:, 1] < b.ymax)
    ok = inb.copy()
    if world.obstacles:
        ok &= world.clearance_many(pts) > margin
        starts = np.vstack([p0[None, :], pts[:-1]])
        ok &= ~_segments_hit_edges(starts, pts, world.edge_starts, world.edge_ends)
    bad = np.flatnonzero(~ok)
    return int(bad[0]) if bad.size else len(pts)


def _segments_hit_edges(p: np.ndarray, q: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """For each segment p->q, whether it touches any edge a->b."""

    def orient(ox, oy, ux, uy, wx, wy):
        return ux * wy - uy * wx

    r = q - p
    e = b - a
    d1 = orient(0, 0, e[None, :, 0], e[None, :, 1], p[:, None, 0] - a[None, :, 0], p[:, None, 1] - a[None, :, 1])
    d2 = orient(0, 0, e[None, :, 0], e[None, :, 1], q[:, None, 0] - a[None, :, 0], q[:, None, 1] - a[None, :, 1])
    d3 = orient(0, 0, r[:, None, 0], r[:, None, 1], a[None, :, 0] - p[:, None, 0], a[None, :, 1] - p[:, None, 1])
    d4 = orient(0, 0, r[:, None, 0], r[:, None, 1], b[None, :, 0] - p[:, None, 0], b[None, :, 1] - p[:, None, 1])
    return np.any((d1 * d2 <= 0) & (d3 * d4 <= 0), axis=1)


def step(world: World, state: RobotState, cmd: Command, dt: float, params: ControlParams = ControlParams()) -> RobotState:
    """Unicycle integration: rotate, then translate along the new heading in
    sub-steps no longer than ``params.substep``; stop before any illegal
    sub-step and flag ``blocked``."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    heading = normalize_angle(state.pose.heading + cmd.angular * dt)
    travel = cmd.linear * dt
    pos = state.position
    blocked = False
    if travel > 0:
        n = max(1, int(math.ceil(travel / params.substep - 1e-9)))
        c, s = math.cos(heading), math.sin(heading)
        frac = np.arange(1, n + 1) * (travel / n)
        pts = np.column_stack([pos.x + c * frac, pos.y + s * frac])
        k = _blocked_at(world, np.array([pos.x, pos.y]), pts, params.clearance_margin)
        if k < n:
            blocked = True
        if k > 0:
            pos = Point(float(pts[k - 1, 0]), float(pts[k - 1, 1]))
    moved = distance(state.position, pos)
    return RobotState(Pose(pos, heading), state.tick + 1, state.odometer + moved, blocked)

"""Virtual sensors.

Each adaptor turns simulated physical sensing into the same small set of
abstractions (:class:`SensorView`) so that navigation code never needs to
know which device produced them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Any, Mapping, Optional

import numpy as np

from .geometry import Point, Pose, World

DEG = math.pi / 180.0
SENSOR_KINDS = ("laser", "ir", "tactile")


class SensorConfigError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Scan:
    """Robot-relative range scan; ``ranges`` holds NaN where nothing was hit."""

    angles: np.ndarray
    ranges: np.ndarray
    max_range: float
    min_range: float

    def __post_init__(self) -> None:
        a = np.asarray(self.angles, dtype=float)
        r = np.asarray(self.ranges, dtype=float)
        if a.shape != r.shape or a.ndim != 1:
            raise ValueError("angles and ranges must have equal length")
        if a.size > 1 and not np.all(np.diff(a) > 0):
            raise ValueError("angles must be strictly ascending")
        present = r[~np.isnan(r)]
        if present.size and (
            present.min() < self.min_range - 1e-12 or present.max() > self.max_range + 1e-12
        ):
            raise ValueError("range outside [min_range, max_range]")
        a.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "ranges", r)

    def __len__(self) -> int:
        return len(self.angles)

    def range_list(self) -> list[Optional[float]]:
        return [None if math.isnan(v) else float(v) for v in self.ranges]

    def beam_toward(self, bearing: float) -> Optional[int]:
        """Index of the beam nearest ``bearing``; None when outside the fan."""
        if len(self.angles) == 0:
            return None
        half = 0.5 * (self.angles[1] - self.angles[0]) if len(self.angles) > 1 else 0.0
        if bearing < self.angles[0] - half or bearing > self.angles[-1] + half:
            return None
        return int(np.argmin(np.abs(self.angles - bearing)))


@dataclass(frozen=True)
class SensorView:
    """What the navigation layer sees each tick.

    Bearings are the robot-relative angles of the closest return inside each
    window; they are None when the window is empty or the device cannot
    resolve direction.
    """

    front_distance: Optional[float]
    left_distance: Optional[float]
    right_distance: Optional[float]
    safe_distance: float
    scan: Optional[Scan] = None
    front_bearing: Optional[float] = None
    left_bearing: Optional[float] = None
    right_bearing: Optional[float] = None
    max_range: float = 0.0

    def __post_init__(self) -> None:
        if not self.safe_distance > 0:
            raise ValueError("safe_distance must be > 0")
        for d in (self.front_distance, self.left_distance, self.right_distance):
            if d is not None and d < 0:
                raise ValueError("distances must be ≥ 0")

    def obstacle_in_front(self) -> bool:
        return _within(self.front_distance, self.safe_distance)

    def obstacle_on_left(self) -> bool:
        return _within(self.left_distance, self.safe_distance)

    def obstacle_on_right(self) -> bool:
        return _within(self.right_distance, self.safe_distance)

    def free_range(self, bearing: float) -> Optional[float]:
        """Free distance along a robot-relative bearing, as far as the device
        can tell (None: direction not covered)."""
        if self.scan is not None:
            i = self.scan.beam_toward(bearing)
            if i is None:
                return None
            r = self.scan.ranges[i]
            return self.scan.max_range if math.isnan(r) else float(r)
        return None


def _within(d: Optional[float], safe: float) -> bool:
    return d is not None and d <= safe


def obstacle_in_front(view: SensorView) -> bool:
    return view.obstacle_in_front()


def obstacle_on_left(view: SensorView) -> bool:
    return view.obstacle_on_left()


def obstacle_on_right(view: SensorView) -> bool:
    return view.obstacle_on_right()


@dataclass(frozen=True)
class SensorModel:
    """A physical sensor configuration plus its adaptor.

    Defaults: laser 181 beams over 180 deg, 0.02-4.0 m; IR trio of 26 deg
    cones (13 rays each) reading to 2 m; tactile contacts at 0.05 m.
    """

    kind: str
    safe_distance: float = 0.3
    max_range: float = 4.0
    min_range: float = 0.02
    fov_deg: float = 180.0
    beams: int = 181
    cone_deg: float = 26.0
    cone_rays: int = 13
    window_deg: float = 13.0
    jump_threshold: float = 0.5
    contact_range: float = 0.05

    def __post_init__(self) -> None:
        if self.kind not in SENSOR_KINDS:
            raise SensorConfigError(f"unknown sensor kind {self.kind!r}")
        if not self.safe_distance > 0:
            raise SensorConfigError("safe_distance must be > 0")
        if not 0 <= self.min_range < self.max_range < math.inf:
            raise SensorConfigError("need 0 ≤ min_range < max_range < inf")
        if self.beams < 2 or self.cone_rays < 1:
            raise SensorConfigError("beam counts must be positive")

    @classmethod
    def create(cls, kind: str, params: Mapping[str, Any] | None = None) -> "SensorModel":
        params = dict(params or {})
        known = {f.name for f in fields(cls)} - {"kind"}
        unknown = sorted(set(params) - known)
        if unknown:
            raise SensorConfigError(f"unknown sensor parameters: {', '.join(unknown)}")
        if kind == "ir":
            params.setdefault("max_range", 2.0)
        elif kind == "tactile":
            params.setdefault("safe_distance", params.get("contact_range", 0.05))
        return cls(kind=kind, **params)

    @property
    def name(self) -> str:
        return self.kind

    @property
    def provides_scan(self) -> bool:
        return self.kind == "laser"

    def sense(self, world: World, pose: Pose) -> SensorView:
        if self.kind == "laser":
            return view_from_scan(
                sense_laser(world, pose, self), self.safe_distance, self.window_deg * DEG
            )
        if self.kind == "ir":
            return sense_ir_trio(world, pose, self)
        return sense_tactile(world, pose, self)


def _check_origin(world: World, pose: Pose) -> None:
    if world.inside_obstacle(pose.position):
        raise ValueError("origin inside obstacle")


def sense_laser(world: World, pose: Pose, model: SensorModel) -> Scan:
    if model.kind != "laser":
        raise SensorConfigError("sense_laser needs a laser model")
    _check_origin(world, pose)
    half = 0.5 * model.fov_deg * DEG
    angles = np.linspace(-half, half, model.beams)
    ranges = world.raycast_many(pose.position, pose.heading + angles, model.max_range)
    ranges = np.where(ranges < model.min_range, model.min_range, ranges)
    return Scan(angles, ranges, model.max_range, model.min_range)


def _window_min(
    angles: np.ndarray, ranges: np.ndarray, center: float, half: float
) -> tuple[Optional[float], Optional[float]]:
    sel = np.abs(angles - center) <= half + 1e-9
    r = np.where(sel, ranges, np.nan)
    if np.all(np.isnan(r)):
        return None, None
    i = int(np.nanargmin(r))
    return float(r[i]), float(angles[i])


def view_from_scan(scan: Scan, safe_distance: float, window: float = 13.0 * DEG) -> SensorView:
    """Collapse a scan into front/left/right readings (min over ±window)."""
    a, r = scan.angles, scan.ranges
    front, fb = _window_min(a, r, 0.0, window)
    left, lb = _window_min(a, r, math.pi / 2, window)
    right, rb = _window_min(a, r, -math.pi / 2, window)
    return SensorView(
        front_distance=front,
        left_distance=left,
        right_distance=right,
        safe_distance=safe_distance,
        scan=scan,
        front_bearing=fb,
        left_bearing=lb,
        right_bearing=rb,
        max_range=scan.max_range,
    )


def _cones(world: World, pose: Pose, model: SensorModel, half: float, rays: int, rng: float):
    offsets = np.linspace(-half, half, rays) if rays > 1 else np.zeros(1)
    out = []
    for center in (0.0, math.pi / 2, -math.pi / 2):
        rel = center + offsets
        r = world.raycast_many(pose.position, pose.heading + rel, rng)
        r = np.where(r < model.min_range, model.min_range, r)
        out.append(_window_min(rel, r, center, half))
    return out


def sense_ir_trio(world: World, pose: Pose, model: SensorModel) -> SensorView:
    """Three IR cones at 0 and ±90 deg; each reports its nearest ray."""
    if model.kind != "ir":
        raise SensorConfigError("sense_ir_trio needs an ir model")
    _check_origin(world, pose)
    (f, fb), (l, lb), (r, rb) = _cones(
        world, pose, model, 0.5 * model.cone_deg * DEG, model.cone_rays, model.max_range
    )
    return SensorView(f, l, r, model.safe_distance, None, fb, lb, rb, model.max_range)


def sense_tactile(world: World, pose: Pose, model: SensorModel) -> SensorView:
    """Contact switches: a window reads ``contact_range`` when touching, None
    otherwise. No bearings, no distances."""
    if model.kind != "tactile":
        raise SensorConfigError("sense_tactile needs a tactile model")
    _check_origin(world, pose)
    readings = _cones(
        world, pose, model, 0.5 * model.cone_deg * DEG, model.cone_rays, model.contact_range
    )
    f, l, r = (model.contact_range if d is not None else None for d, _ in readings)
    return SensorView(f, l, r, model.safe_distance, None, max_range=model.contact_range)


def discontinuity_points(
    scan: Optional[Scan], pose: Pose, jump_threshold: float = 0.5
) -> list[Point]:
    """World-frame endpoints of contiguous hit intervals, ordered by angle.

    A discontinuity is a neighbouring beam pair where one beam hits and the
    other does not, or where both hit but the ranges differ by more than
    ``jump_threshold``. Fan edges are not discontinuities. A one-beam
    interval contributes its single return twice, as start and end.
    """
    if scan is None:
        raise SensorConfigError("variant requires distance sensing")
    r = scan.ranges
    hit = ~np.isnan(r)
    idx: list[int] = []
    for i in range(len(r) - 1):
        a, b = hit[i], hit[i + 1]
        if a != b:
            idx.append(i if a else i + 1)
        elif a and b and abs(r[i] - r[i + 1]) > jump_threshold:
            idx.extend((i, i + 1))
    return [pose.to_world(float(scan.angles[i]), float(r[i])) for i in sorted(idx)]

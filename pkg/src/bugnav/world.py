"""Scenarios: loading, validation, serialisation, random generation, and the
grid flood-fill reachability oracle."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Optional

import numpy as np
import shapely
from scipy import ndimage

from .geometry import Bounds, Point, Polygon, World, points_in_polygon

SCENARIO_KEYS = ("start", "goal", "err", "bounds", "obstacles")
SECTION_KEYS = ("sensor", "control", "variant", "engine")


class ScenarioError(ValueError):
    """Malformed or invalid scenario document."""


@dataclass(frozen=True, eq=False)
class Scenario:
    start: Point
    goal: Point
    err: float
    obstacles: tuple[Polygon, ...]
    bounds: Bounds
    sensor: Mapping[str, Any] = field(default_factory=dict)
    control: Mapping[str, Any] = field(default_factory=dict)
    variant: Mapping[str, Any] = field(default_factory=dict)
    engine: Mapping[str, Any] = field(default_factory=dict)
    name: str = "scenario"

    def __post_init__(self) -> None:
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        validate_scenario(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return to_document(self) == to_document(other) and self.name == other.name

    def __hash__(self) -> int:
        return hash(dump_scenario(self))

    @cached_property
    def world(self) -> World:
        return World(self.obstacles, self.bounds)


def validate_scenario(sc: Scenario) -> None:
    if not (isinstance(sc.err, (int, float)) and math.isfinite(sc.err) and sc.err > 0):
        raise ScenarioError("err must be > 0")
    for label, p in (("start", sc.start), ("goal", sc.goal)):
        if not sc.bounds.contains(p):
            raise ScenarioError(f"{label} outside bounds")
        for poly in sc.obstacles:
            if poly.contains(p) or poly.boundary_distance(p) <= 1e-9:
                raise ScenarioError(f"{label} inside obstacle")
    if sc.start == sc.goal:
        raise ScenarioError("start and goal coincide")
    shapes = [shapely.Polygon([tuple(v) for v in p.vertices]) for p in sc.obstacles]
    for i in range(len(shapes)):
        for j in range(i + 1, len(shapes)):
            if shapes[i].intersection(shapes[j]).area > 1e-12:
                raise ScenarioError(f"obstacles {i} and {j} overlap")


def _point(value: Any, label: str) -> Point:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise ScenarioError(f"{label} must be [x, y]")
    try:
        return Point(float(value[0]), float(value[1]))
    except ValueError as exc:
        raise ScenarioError(f"{label}: {exc}") from None


def from_document(doc: Mapping[str, Any], name: str = "scenario") -> Scenario:
    if not isinstance(doc, Mapping):
        raise ScenarioError("scenario document must be a JSON object")
    unknown = sorted(set(doc) - set(SCENARIO_KEYS) - set(SECTION_KEYS))
    if unknown:
        raise ScenarioError(f"unknown fields: {', '.join(unknown)}")
    missing = [k for k in SCENARIO_KEYS if k not in doc]
    if missing:
        raise ScenarioError(f"missing fields: {', '.join(missing)}")

    err = doc["err"]
    if not isinstance(err, (int, float)) or isinstance(err, bool):
        raise ScenarioError("err must be a number")
    b = doc["bounds"]
    if not isinstance(b, list) or len(b) != 4 or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in b
    ):
        raise ScenarioError("bounds must be [xmin, ymin, xmax, ymax]")
    try:
        bounds = Bounds(*(float(v) for v in b))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    if not isinstance(doc["obstacles"], list):
        raise ScenarioError("obstacles must be a list of polygons")
    obstacles = []
    for i, raw in enumerate(doc["obstacles"]):
        if not isinstance(raw, list):
            raise ScenarioError(f"obstacle {i} must be a list of [x, y]")
        verts = [_point(v, f"obstacle {i} vertex") for v in raw]
        try:
            obstacles.append(Polygon(verts))
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
    sections = {}
    for key in SECTION_KEYS:
        sec = doc.get(key, {})
        if not isinstance(sec, Mapping):
            raise ScenarioError(f"{key} section must be an object")
        sections[key] = dict(sec)
    return Scenario(
        start=_point(doc["start"], "start"),
        goal=_point(doc["goal"], "goal"),
        err=float(err),
        obstacles=tuple(obstacles),
        bounds=bounds,
        name=name,
        **sections,
    )


def load_scenario(document: bytes | str, name: str = "scenario") -> Scenario:
    """Parse and validate a scenario JSON document."""
    try:
        doc = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ScenarioError(f"parse error: {exc}") from None
    return from_document(doc, name=name)


def read_scenario(path) -> Scenario:
    from pathlib import Path

    p = Path(path)
    return load_scenario(p.read_bytes(), name=p.stem)


def to_document(sc: Scenario) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "start": sc.start.as_list(),
        "goal": sc.goal.as_list(),
        "err": sc.err,
        "bounds": sc.bounds.as_list(),
        "obstacles": [[v.as_list() for v in p.vertices] for p in sc.obstacles],
    }
    for key in SECTION_KEYS:
        sec = getattr(sc, key)
        if sec:
            doc[key] = dict(sec)
    return doc


def dump_scenario(sc: Scenario) -> bytes:
    return (json.dumps(to_document(sc), indent=1) + "\n").encode("utf-8")


# --------------------------------------------------------------------------
# reachability oracle


def free_grid(scenario: Scenario, cell: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Boolean free mask (ny, nx) plus the x and y cell-centre coordinates."""
    b = scenario.bounds
    nx = max(1, int(math.ceil((b.xmax - b.xmin) / cell - 1e-9)))
    ny = max(1, int(math.ceil((b.ymax - b.ymin) / cell - 1e-9)))
    xs = b.xmin + (np.arange(nx) + 0.5) * cell
    ys = b.ymin + (np.arange(ny) + 0.5) * cell
    free = np.ones((ny, nx), dtype=bool)
    for poly in scenario.obstacles:
        lo = poly.array.min(axis=0)
        hi = poly.array.max(axis=0)
        ix = np.flatnonzero((xs > lo[0]) & (xs < hi[0]))
        iy = np.flatnonzero((ys > lo[1]) & (ys < hi[1]))
        if ix.size == 0 or iy.size == 0:
            continue
        gx, gy = np.meshgrid(xs[ix], ys[iy])
        inside = points_in_polygon(poly, np.column_stack([gx.ravel(), gy.ravel()]))
        sub = free[iy[0] : iy[-1] + 1, ix[0] : ix[-1] + 1]
        sub &= ~inside.reshape(gx.shape)
    return free, xs, ys


def grid_reachable(scenario: Scenario, cell: Optional[float] = None) -> bool:
    """Flood-fill the free cells from the start cell; True iff the goal cell
    is connected to it (4-neighbourhood)."""
    if cell is None:
        cell = scenario.err / 4.0
    if not (cell > 0 and cell <= scenario.err / 2.0 + 1e-12):
        raise ValueError("cell must satisfy 0 < cell <= err/2")
    free, xs, ys = free_grid(scenario, cell)
    b = scenario.bounds

    def index(p: Point) -> tuple[int, int]:
        i = min(len(ys) - 1, int((p.y - b.ymin) // cell))
        j = min(len(xs) - 1, int((p.x - b.xmin) // cell))
        return i, j

    si, gi = index(scenario.start), index(scenario.goal)
    if not free[si] or not free[gi]:
        raise ValueError("endpoint blocked at this resolution")
    labels, _ = ndimage.label(free)
    return bool(labels[si] == labels[gi])


# --------------------------------------------------------------------------
# random worlds


def _convex_hull(pts: np.ndarray) -> np.ndarray:
    pts = sorted(map(tuple, pts))

    def half(seq):
        out: list = []
        for p in seq:
            while len(out) >= 2 and (
                (out[-1][0] - out[-2][0]) * (p[1] - out[-2][1])
                - (out[-1][1] - out[-2][1]) * (p[0] - out[-2][0])
            ) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1])


def sealed_box(center: Point, inner: float = 1.2, wall: float = 0.3) -> list[Polygon]:
    """Four wall rectangles (sharing edges, interiors disjoint) enclosing
    ``center``."""
    cx, cy = center.x, center.y
    a, b = inner, inner + wall

    def rect(x0, y0, x1, y1):
        return Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])

    return [
        rect(cx - b, cy - b, cx + b, cy - a),  # bottom
        rect(cx - b, cy + a, cx + b, cy + b),  # top
        rect(cx - b, cy - a, cx - a, cy + a),  # left
        rect(cx + a, cy - a, cx + b, cy + a),  # right
    ]


def random_world(
    seed: int,
    n_obstacles: Optional[int] = None,
    sealed: Optional[bool] = None,
    size: float = 20.0,
    err: float = 0.2,
    gap: float = 1.2,
) -> Scenario:
    """Random arena of convex obstacles with pairwise gaps of at least ``gap``.

    When ``sealed`` (default: every fifth seed) four of the obstacles are
    wall rectangles boxing the goal in.
    """
    rng = np.random.default_rng(seed)
    if n_obstacles is None:
        n_obstacles = int(rng.integers(5, 16))
    if sealed is None:
        sealed = seed % 5 == 4
    margin = 1.5
    while True:
        start = rng.uniform(margin, size - margin, 2)
        goal = rng.uniform(margin + 2.0, size - margin - 2.0, 2)
        if np.hypot(*(goal - start)) >= 0.5 * size:
            break
    s, g = Point(*map(float, start)), Point(*map(float, goal))
    placed: list[Polygon] = sealed_box(g) if sealed else []
    shapes = [shapely.Polygon([tuple(v) for v in p.vertices]) for p in placed]
    d = goal - start
    length = float(np.hypot(*d))
    u = d / length
    nrm = np.array([-u[1], u[0]])
    attempts = 0
    while len(placed) < n_obstacles and attempts < 5000:
        attempts += 1
        if rng.random() < 0.6:
            c = start + u * rng.uniform(0.15, 0.85) * length + nrm * rng.normal(0.0, 1.5)
        else:
            c = rng.uniform(margin, size - margin, 2)
        r = rng.uniform(0.5, 1.6)
        k = int(rng.integers(3, 9))
        ang = np.sort(rng.uniform(0, 2 * np.pi, k))
        rad = r * rng.uniform(0.6, 1.0, k)
        hull = _convex_hull(c + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]))
        if len(hull) < 3:
            continue
        hull = np.round(hull, 3)
        cand = shapely.Polygon(hull)
        if not cand.is_valid or cand.area < 0.25:
            continue
        lo, hi = hull.min(axis=0), hull.max(axis=0)
        if lo.min() < margin or hi.max() > size - margin:
            continue
        if cand.distance(shapely.Point(*start)) < 1.0 or cand.distance(shapely.Point(*goal)) < 1.0:
            continue
        if any(cand.distance(o) < gap for o in shapes):
            continue
        try:
            poly = Polygon([tuple(map(float, v)) for v in hull])
        except ValueError:
            continue
        placed.append(poly)
        shapes.append(cand)
    return Scenario(
        start=s,
        goal=g,
        err=err,
        obstacles=tuple(placed),
        bounds=Bounds(0.0, 0.0, size, size),
        name=f"random-{seed}",
    )

"""Planar geometry primitives and the polygonal obstacle world.

Conventions: x right, y up, headings measured counter-clockwise from +x.
Points on a polygon boundary count as *outside* the polygon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

EPS = 1e-9


def normalize_angle(angle: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    a = math.fmod(angle + math.pi, 2.0 * math.pi)
    if a < 0.0:
        a += 2.0 * math.pi
    a -= math.pi
    # fmod can round up to exactly +pi
    return -math.pi if a >= math.pi else a


@dataclass(frozen=True, slots=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def __add__(self, other: Point) -> Point:
        return Point(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Point) -> Point:
        return Point(self.x - other.x, self.y - other.y)

    def scaled(self, k: float) -> Point:
        return Point(self.x * k, self.y * k)

    def as_list(self) -> list[float]:
        return [self.x, self.y]


@dataclass(frozen=True, slots=True)
class Pose:
    position: Point
    heading: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.heading):
            raise ValueError("non-finite heading")
        object.__setattr__(self, "heading", normalize_angle(self.heading))

    @property
    def x(self) -> float:
        return self.position.x

    @property
    def y(self) -> float:
        return self.position.y

    def bearing_to(self, target: Point) -> float:
        """Robot-relative bearing of ``target`` in [-pi, pi)."""
        return normalize_angle(
            math.atan2(target.y - self.y, target.x - self.x) - self.heading
        )

    def to_world(self, rel_angle: float, rng: float) -> Point:
        a = self.heading + rel_angle
        return Point(self.x + rng * math.cos(a), self.y + rng * math.sin(a))


def distance(p: Point, q: Point) -> float:
    return math.hypot(q.x - p.x, q.y - p.y)


def path_length(points: Sequence[Point]) -> float:
    """Sum of consecutive Euclidean distances."""
    if len(points) == 0:
        raise ValueError("path_length needs at least one point")
    return sum(distance(a, b) for a, b in zip(points, points[1:]))


def _cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def _orient(p: Point, q: Point, r: Point) -> float:
    return _cross(q.x - p.x, q.y - p.y, r.x - p.x, r.y - p.y)


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    ex, ey = b.x - a.x, b.y - a.y
    den = ex * ex + ey * ey
    if den == 0.0:
        return distance(p, a)
    t = ((p.x - a.x) * ex + (p.y - a.y) * ey) / den
    t = min(1.0, max(0.0, t))
    return math.hypot(p.x - (a.x + t * ex), p.y - (a.y + t * ey))


def segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """Closed-segment intersection test (touching counts)."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > EPS and d2 < -EPS) or (d1 < -EPS and d2 > EPS)) and (
        (d3 > EPS and d4 < -EPS) or (d3 < -EPS and d4 > EPS)
    ):
        return True

    def on_seg(a: Point, b: Point, c: Point, d: float) -> bool:
        return abs(d) <= EPS and point_segment_distance(c, a, b) <= EPS

    return (
        on_seg(q1, q2, p1, d1)
        or on_seg(q1, q2, p2, d2)
        or on_seg(p1, p2, q1, d3)
        or on_seg(p1, p2, q2, d4)
    )


def on_m_line(p: Point, start: Point, goal: Point, eps: float) -> bool:
    """True iff ``p`` lies within ``eps`` of the start-goal segment and its
    projection falls inside the segment."""
    ex, ey = goal.x - start.x, goal.y - start.y
    den = ex * ex + ey * ey
    if den <= EPS * EPS:
        raise ValueError("degenerate m-line")
    t = ((p.x - start.x) * ex + (p.y - start.y) * ey) / den
    if t < 0.0 or t > 1.0:
        return False
    perp = abs(_cross(ex, ey, p.x - start.x, p.y - start.y)) / math.sqrt(den)
    return perp <= eps


def m_line_offset(p: Point, start: Point, goal: Point) -> float:
    """Signed perpendicular offset of ``p`` from the start-goal line; positive
    on the left of the start->goal direction."""
    ex, ey = goal.x - start.x, goal.y - start.y
    n = math.hypot(ex, ey)
    if n <= EPS:
        raise ValueError("degenerate m-line")
    return _cross(ex, ey, p.x - start.x, p.y - start.y) / n


def signed_area(vertices: Sequence[Point]) -> float:
    s = 0.0
    for a, b in zip(vertices, list(vertices[1:]) + [vertices[0]]):
        s += a.x * b.y - b.x * a.y
    return 0.5 * s


class Polygon:
    """Simple polygon, stored counter-clockwise.

    Vertices given clockwise are reversed on construction.
    """

    __slots__ = ("vertices", "_array", "__weakref__")

    def __init__(self, vertices: Iterable[Point | Sequence[float]]):
        verts = [v if isinstance(v, Point) else Point(float(v[0]), float(v[1])) for v in vertices]
        if len(verts) < 3:
            raise ValueError("polygon needs ≥ 3 vertices")
        area = signed_area(verts)
        if abs(area) <= EPS:
            raise ValueError("polygon has zero area")
        if area < 0:
            verts.reverse()
        if not _is_simple(verts):
            raise ValueError("polygon is not simple")
        self.vertices: tuple[Point, ...] = tuple(verts)
        self._array = np.array([[v.x, v.y] for v in verts], dtype=float)

    def __repr__(self) -> str:
        return f"Polygon({[tuple(v) for v in self.vertices]})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Polygon) and self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    def edges(self) -> list[tuple[Point, Point]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def contains(self, p: Point) -> bool:
        return polygon_contains(self, p)

    def boundary_distance(self, p: Point) -> float:
        return min(point_segment_distance(p, a, b) for a, b in self.edges())


def _is_simple(verts: Sequence[Point]) -> bool:
    n = len(verts)
    edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                # adjacent edges share exactly one vertex; reject folding back
                a, b = edges[i]
                c, d = edges[j]
                shared = b if j == i + 1 else a
                other_i = a if j == i + 1 else b
                other_j = d if j == i + 1 else c
                if abs(_orient(shared, other_i, other_j)) <= EPS:
                    ux, uy = other_i.x - shared.x, other_i.y - shared.y
                    vx, vy = other_j.x - shared.x, other_j.y - shared.y
                    if ux * vx + uy * vy > 0:
                        return False
                continue
            if segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def polygon_contains(poly: Polygon, p: Point) -> bool:
    """Strict interior test; boundary points report False."""
    if poly.boundary_distance(p) <= EPS:
        return False
    inside = False
    v = poly.vertices
    n = len(v)
    j = n - 1
    for i in range(n):
        yi, yj = v[i].y, v[j].y
        if (yi > p.y) != (yj > p.y):
            xc = v[i].x + (p.y - yi) * (v[j].x - v[i].x) / (yj - yi)
            if p.x < xc:
                inside = not inside
        j = i
    return inside


def points_in_polygon(poly: Polygon, pts: np.ndarray) -> np.ndarray:
    """Vectorised strict interior test for an (N, 2) array."""
    v = poly.array
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    vj = np.roll(v, 1, axis=0)
    for (xi, yi), (xj, yj) in zip(v, vj):
        crosses = (yi > y) != (yj > y)
        if not crosses.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            xc = xi + (y - yi) * (xj - xi) / (yj - yi)
        inside ^= crosses & (x < xc)
    if inside.any():
        near = _points_segments_distance(pts[inside], v, vj).min(axis=1) <= EPS
        idx = np.flatnonzero(inside)
        inside[idx[near]] = False
    return inside


def _points_segments_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(P, E) matrix of distances from points to segments a->b."""
    e = b - a
    den = np.einsum("ij,ij->i", e, e)
    den = np.where(den == 0.0, 1.0, den)
    w = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pej,ej->pe", w, e) / den, 0.0, 1.0)
    d = w - t[..., None] * e[None, :, :]
    return np.sqrt(np.einsum("pej,pej->pe", d, d))


@dataclass(frozen=True)
class Bounds:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.xmin, self.ymin, self.xmax, self.ymax)):
            raise ValueError("bounds must be finite")
        if self.xmin >= self.xmax or self.ymin >= self.ymax:
            raise ValueError("bounds must have xmin < xmax and ymin < ymax")

    def contains(self, p: Point) -> bool:
        return self.xmin < p.x < self.xmax and self.ymin < p.y < self.ymax

    def as_list(self) -> list[float]:
        return [self.xmin, self.ymin, self.xmax, self.ymax]


@dataclass(frozen=True)
class World:
    """Obstacle polygons plus the (non-colliding) arena rectangle."""

    obstacles: tuple[Polygon, ...]
    bounds: Bounds

    @cached_property
    def edge_starts(self) -> np.ndarray:
        if not self.obstacles:
            return np.zeros((0, 2))
        return np.concatenate([p.array for p in self.obstacles])

    @cached_property
    def edge_ends(self) -> np.ndarray:
        if not self.obstacles:
            return np.zeros((0, 2))
        return np.concatenate([np.roll(p.array, -1, axis=0) for p in self.obstacles])

    @cached_property
    def _bboxes(self) -> np.ndarray:
        if not self.obstacles:
            return np.zeros((0, 4))
        return np.array(
            [[*p.array.min(axis=0), *p.array.max(axis=0)] for p in self.obstacles]
        )

    def inside_obstacle(self, p: Point) -> bool:
        bb = self._bboxes
        for k in np.flatnonzero(
            (bb[:, 0] < p.x) & (p.x < bb[:, 2]) & (bb[:, 1] < p.y) & (p.y < bb[:, 3])
        ):
            if polygon_contains(self.obstacles[k], p):
                return True
        return False

    def clearance(self, p: Point) -> float:
        """Distance to the nearest obstacle edge (inf in an empty world)."""
        if not self.obstacles:
            return math.inf
        return float(self.clearance_many(np.array([[p.x, p.y]]))[0])

    def clearance_many(self, pts: np.ndarray, chunk: int = 2048) -> np.ndarray:
        if not self.obstacles:
            return np.full(len(pts), np.inf)
        out = np.empty(len(pts))
        for i in range(0, len(pts), chunk):
            d = _points_segments_distance(pts[i : i + chunk], self.edge_starts, self.edge_ends)
            out[i : i + chunk] = d.min(axis=1)
        return out

    def raycast_many(
        self, origin: Point, headings: np.ndarray, max_range: float
    ) -> np.ndarray:
        """Distances along each heading to the nearest obstacle edge; NaN when
        nothing is hit within ``max_range``. Origin must be outside obstacles
        (checked by :func:`raycast`, not here)."""
        headings = np.asarray(headings, dtype=float)
        out = np.full(headings.shape, np.nan)
        if not self.obstacles:
            return out
        a = self.edge_starts
        e = self.edge_ends - a
        # cull edges whose both ends are beyond range
        wx = a[:, 0] - origin.x
        wy = a[:, 1] - origin.y
        seg_d = _points_segments_distance(np.array([[origin.x, origin.y]]), a, self.edge_ends)[0]
        keep = seg_d <= max_range
        if not keep.any():
            return out
        wx, wy, e = wx[keep], wy[keep], e[keep]
        dx = np.cos(headings)[:, None]
        dy = np.sin(headings)[:, None]
        den = dx * e[:, 1] - dy * e[:, 0]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t = (wx * e[:, 1] - wy * e[:, 0]) / den
            s = (wx * dy - wy * dx) / den
        ok = (np.abs(den) > 1e-12) & (t >= 0.0) & (s >= -EPS) & (s <= 1.0 + EPS)
        t = np.where(ok, t, np.inf)
        best = t.min(axis=1)
        hit = best <= max_range
        out[hit] = best[hit]
        return out


def raycast(
    world: World, origin: Point, heading: float, max_range: float
) -> Optional[float]:
    """Distance to the nearest obstacle edge along ``heading``, or None if
    nothing lies within ``max_range``. Arena bounds are not obstacles."""
    if not (0.0 < max_range < math.inf):
        raise ValueError("max_range must be positive and finite")
    if world.inside_obstacle(origin):
        raise ValueError("origin inside obstacle")
    r = world.raycast_many(origin, np.array([heading]), max_range)[0]
    return None if math.isnan(r) else float(r)

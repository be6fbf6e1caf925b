"""Metrics, trace files, JSON reports, SVG figures and comparison tables."""

from __future__ import annotations

import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np

from .engine import Event, Mode, Outcome, RunReport, TraceRow
from .geometry import Point, Pose
from .sensors import SENSOR_KINDS
from .variants import VARIANT_IDS
from .world import Scenario

TRACE_HEADER = "tick,x,y,theta,mode"
TABLE_COLUMNS = ("variant", "sensor", "scenario", "outcome", "total_path_m", "ticks", "min_clearance_m")


def compute_metrics(
    trajectory: Sequence[TraceRow], scenario: Scenario, events: Iterable[Event] = ()
) -> tuple[float, float, tuple[float, ...]]:
    """Total path, minimum clearance over all ticks, and per-leg lengths
    (legs split at leave events)."""
    if not trajectory:
        raise ValueError("empty trajectory")
    pts = np.array([[r.pose.x, r.pose.y] for r in trajectory], dtype=float)
    steps = np.hypot(*np.diff(pts, axis=0).T) if len(pts) > 1 else np.zeros(0)
    total = float(steps.sum())
    clearance = float(scenario.world.clearance_many(pts).min())
    cuts = sorted({e.tick for e in events if e.kind == "leave"})
    ticks = [r.tick for r in trajectory]
    legs: list[float] = []
    lo = 0
    for c in cuts:
        hi = int(np.searchsorted(ticks, c))
        legs.append(float(steps[lo:hi].sum()))
        lo = hi
    legs.append(float(steps[lo:].sum()))
    return total, clearance, tuple(legs)


def _g(v: float) -> str:
    return format(v, ".9g")


def trace_text(report: RunReport) -> str:
    lines = [TRACE_HEADER]
    for r in report.trajectory:
        lines.append(f"{r.tick},{_g(r.pose.x)},{_g(r.pose.y)},{_g(r.pose.heading)},{r.mode.value}")
    return "\n".join(lines) + "\n"


def write_trace(report: RunReport, sink: Union[str, os.PathLike, io.IOBase]) -> int:
    """Write the per-tick trace; returns the number of bytes written."""
    data = trace_text(report).encode("utf-8")
    if isinstance(sink, (str, os.PathLike)):
        atomic_write(sink, data)
    elif isinstance(sink, io.TextIOBase):
        sink.write(data.decode("utf-8"))
    else:
        sink.write(data)
    return len(data)


def read_trace(source: Union[str, os.PathLike, bytes]) -> list[TraceRow]:
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError("not a trace file")
    modes = {m.value: m for m in Mode}
    rows = []
    for line in lines[1:]:
        tick, x, y, theta, mode = line.split(",")
        rows.append(TraceRow(int(tick), Pose(Point(float(x), float(y)), float(theta)), modes[mode]))
    return rows


def _num(v: float) -> Optional[float]:
    return v if math.isfinite(v) else None


def report_document(report: RunReport) -> dict[str, Any]:
    return {
        "outcome": report.outcome.value,
        "variant": report.variant,
        "sensor": report.sensor,
        "scenario": report.scenario,
        "ticks": report.ticks,
        "total_path_m": report.total_path,
        "min_clearance_m": _num(report.min_clearance),
        "leg_lengths_m": list(report.leg_lengths),
        "final_position": report.final_position.as_list(),
        "hit_points": [p.as_list() for p in report.hit_points],
        "leave_points": [p.as_list() for p in report.leave_points],
        "reversals": report.reversals,
        "events": [{"tick": e.tick, "kind": e.kind, "point": e.point.as_list()} for e in report.events],
        "config": report.config,
        "trajectory": [
            [r.tick, r.pose.x, r.pose.y, r.pose.heading, r.mode.value] for r in report.trajectory
        ],
    }


def report_json(report: RunReport) -> bytes:
    return (json.dumps(report_document(report), indent=1, sort_keys=True) + "\n").encode("utf-8")


def write_report(report: RunReport, path: Union[str, os.PathLike]) -> None:
    atomic_write(path, report_json(report))


def _f(v: float) -> str:
    return format(v, ".6g")


def render_svg(report: RunReport, scenario: Scenario, scale: float = 40.0) -> str:
    """A figure with obstacles, start and goal, the path, hit and leave points."""
    b = scenario.bounds
    w, h = (b.xmax - b.xmin) * scale, (b.ymax - b.ymin) * scale

    def xy(p: Point) -> str:
        return f"{_f((p.x - b.xmin) * scale)},{_f((b.ymax - p.y) * scale)}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(w)}" height="{_f(h)}" '
        f'viewBox="0 0 {_f(w)} {_f(h)}">',
        f'<rect class="bounds" x="0" y="0" width="{_f(w)}" height="{_f(h)}" fill="white" stroke="black"/>',
    ]
    for poly in scenario.obstacles:
        pts = " ".join(xy(v) for v in poly.vertices)
        out.append(f'<polygon class="obstacle" points="{pts}" fill="#999" stroke="#333"/>')
    path = " ".join(xy(r.pose.position) for r in report.trajectory)
    out.append(f'<polyline class="trajectory" points="{path}" fill="none" stroke="#06c" stroke-width="1.5"/>')
    r = _f(0.15 * scale)
    for cls, colour, p in (("start", "#0a0", scenario.start), ("goal", "#c00", scenario.goal)):
        x, y = xy(p).split(",")
        out.append(f'<circle class="{cls}" cx="{x}" cy="{y}" r="{r}" fill="{colour}"/>')
    for cls, colour, pts in (("hit", "#f80", report.hit_points), ("leave", "#80f", report.leave_points)):
        for p in pts:
            x, y = xy(p).split(",")
            out.append(f'<circle class="{cls}" cx="{x}" cy="{y}" r="{_f(0.1 * scale)}" fill="{colour}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class ErrorCell:
    """A compare cell that could not run (configuration error)."""

    variant: str
    sensor: str
    scenario: str
    message: str


@dataclass(frozen=True)
class CompareRow:
    variant: str
    sensor: str
    scenario: str
    outcome: str
    total_path: float
    ticks: int
    min_clearance: float


def _order(variant: str, sensor: str, scenario: str) -> tuple:
    vi = VARIANT_IDS.index(variant) if variant in VARIANT_IDS else len(VARIANT_IDS)
    si = SENSOR_KINDS.index(sensor) if sensor in SENSOR_KINDS else len(SENSOR_KINDS)
    return (vi, variant, si, sensor, scenario)


def compare_runs(reports: Sequence[Union[RunReport, ErrorCell]]) -> list[CompareRow]:
    if not reports:
        raise ValueError("nothing to compare")
    rows = []
    for r in reports:
        if isinstance(r, ErrorCell):
            rows.append(CompareRow(r.variant, r.sensor, r.scenario, "error", math.nan, 0, math.nan))
        else:
            rows.append(
                CompareRow(r.variant, r.sensor, r.scenario, r.outcome.value, r.total_path, r.ticks, r.min_clearance)
            )
    return sorted(rows, key=lambda c: _order(c.variant, c.sensor, c.scenario))


def _cell(v: float) -> str:
    if math.isnan(v):
        return ""
    if math.isinf(v):
        return "inf"
    return format(v, ".6f")


def format_table(rows: Sequence[CompareRow]) -> str:
    lines = ["\t".join(TABLE_COLUMNS)]
    for c in rows:
        ticks = "" if c.outcome == "error" else str(c.ticks)
        lines.append(
            "\t".join([c.variant, c.sensor, c.scenario, c.outcome, _cell(c.total_path), ticks, _cell(c.min_clearance)])
        )
    return "\n".join(lines) + "\n"


def atomic_write(path: Union[str, os.PathLike], data: bytes) -> None:
    """Write to a temporary sibling, then rename over the target."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


__all__ = [
    "CompareRow",
    "ErrorCell",
    "Outcome",
    "RunReport",
    "TABLE_COLUMNS",
    "TRACE_HEADER",
    "atomic_write",
    "compare_runs",
    "compute_metrics",
    "format_table",
    "read_trace",
    "render_svg",
    "report_document",
    "report_json",
    "trace_text",
    "write_report",
    "write_trace",
]

"""Small helpers shared by the test modules."""

from __future__ import annotations

import functools

from bugnav import SensorModel, make_strategy, run_episode
from bugnav.cli import FIXTURES
from bugnav.geometry import Point, Polygon
from bugnav.world import Scenario, read_scenario


def fixture(name: str) -> Scenario:
    return read_scenario(FIXTURES / f"{name}.json")


def rect(x0: float, y0: float, x1: float, y1: float) -> Polygon:
    return Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def scenario(start, goal, obstacles=(), bounds=(-20.0, -20.0, 20.0, 20.0), err=0.2, **sections) -> Scenario:
    from bugnav.geometry import Bounds

    return Scenario(Point(*start), Point(*goal), err, tuple(obstacles), Bounds(*bounds), **sections)


def run(sc: Scenario, variant: str, sensor: str = "laser", max_ticks=None):
    return run_episode(
        sc, make_strategy(variant, sc.variant), SensorModel.create(sensor, sc.sensor), max_ticks
    )


@functools.lru_cache(maxsize=None)
def run_fixture(name: str, variant: str, sensor: str = "laser"):
    """Fixture episodes are deterministic, so tests can share them."""
    return run(fixture(name), variant, sensor)

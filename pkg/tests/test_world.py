import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bugnav.geometry import Point
from bugnav.world import (
    ScenarioError,
    dump_scenario,
    from_document,
    grid_reachable,
    load_scenario,
    random_world,
    sealed_box,
)

from _support import fixture, rect, scenario

DOC = {
    "start": [0.0, 0.0],
    "goal": [5.0, 0.0],
    "err": 0.2,
    "bounds": [-2.0, -3.0, 8.0, 3.0],
    "obstacles": [[[2.0, -1.0], [3.0, -1.0], [3.0, 1.0], [2.0, 1.0]]],
}


def test_load_one_square():
    sc = load_scenario(json.dumps(DOC).encode())
    assert len(sc.obstacles) == 1
    assert sc.goal == Point(5, 0)


@pytest.mark.parametrize(
    "patch, message",
    [
        ({"start": [2.5, 0.0]}, "start inside obstacle"),
        ({"goal": [2.5, 0.5]}, "goal inside obstacle"),
        ({"obstacles": [[[0.0, 1.0], [1.0, 1.0]]]}, "polygon needs ≥ 3 vertices"),
        ({"err": 0}, "err"),
        ({"bounds": [0, 0, -1, 1]}, "bounds"),
        ({"extra": 1}, "unknown fields"),
        ({"start": [9.0, 0.0]}, "start outside bounds"),
    ],
)
def test_load_rejects(patch, message):
    with pytest.raises(ScenarioError, match=message):
        load_scenario(json.dumps({**DOC, **patch}))


def test_load_rejects_missing_field_and_bad_json():
    doc = dict(DOC)
    del doc["goal"]
    with pytest.raises(ScenarioError, match="missing"):
        from_document(doc)
    with pytest.raises(ScenarioError):
        load_scenario(b"{not json")


def test_overlapping_obstacles_rejected():
    with pytest.raises(ScenarioError, match="overlap"):
        scenario((0, 0), (9, 0), [rect(2, -1, 4, 1), rect(3, 0, 5, 2)])


def test_touching_obstacles_allowed():
    sc = scenario((0, 0), (9, 0), [rect(2, -1, 3, 1), rect(3, -1, 4, 1)])
    assert len(sc.obstacles) == 2


def test_grid_reachable_examples():
    assert grid_reachable(scenario((0, 0), (5, 5)))
    sealed = scenario((-8, 0), (5, 0), sealed_box(Point(5, 0)))
    assert not grid_reachable(sealed)
    assert grid_reachable(scenario((-8, 0), (8, 0), [rect(-1, -2, 1, 2)]))


def test_grid_reachable_blocked_endpoint():
    # a 0.3 m gap is narrower than one 1 m cell around the goal
    sc = scenario((0, 0), (5, 0.05), [rect(4, -1, 6, 0), rect(4, 0.1, 6, 1)], err=2.0)
    with pytest.raises(ValueError, match="endpoint blocked at this resolution"):
        grid_reachable(sc, cell=1.0)


def test_fixture_oracle_results():
    assert not grid_reachable(fixture("env1"))
    assert grid_reachable(fixture("env2"))
    assert grid_reachable(fixture("env3"))
    assert grid_reachable(fixture("empty"))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.65, 2.0), st.sampled_from([0.1, 0.05, 0.025]))
def test_grid_reachable_monotone_on_corridors(width, cell):
    # corridor through a wall; all corridor widths exceed 4 coarse cells
    lo, hi = -width / 2, width / 2
    wall = [rect(0, -6, 1, lo), rect(0, hi, 1, 6)]
    sc = scenario((-3, 0), (3, 0), wall, bounds=(-5, -6, 5, 6), err=0.4)
    coarse = 0.15
    assert width > 4 * coarse
    if grid_reachable(sc, coarse):
        assert grid_reachable(sc, cell)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_round_trip_on_random_worlds(seed):
    sc = random_world(seed)
    again = load_scenario(dump_scenario(sc), name=sc.name)
    assert again == sc
    assert dump_scenario(again) == dump_scenario(sc)


def test_random_world_is_deterministic_and_sized():
    a, b = random_world(17), random_world(17)
    assert dump_scenario(a) == dump_scenario(b)
    for seed in range(30):
        n = len(random_world(seed).obstacles)
        assert 5 <= n <= 15 or seed % 5 == 4


def test_round_trip_keeps_sections():
    sc = fixture("disc")
    assert load_scenario(dump_scenario(sc), name="disc") == sc
    assert dict(sc.sensor) == {"safe_distance": 0.1}

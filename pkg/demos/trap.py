"""
Coming back to a point already visited
======================================

On the spiral fixture every m-line leave lands the robot on the inner arm,
and following that arm eventually brings it past its first hit point again.
Bug2 carries on regardless.  Alg1 and Alg2 notice the repeat and turn
around once.  This prints the event log of each run.
"""

from bugnav import SensorModel, make_strategy, run_episode
from bugnav.cli import FIXTURES
from bugnav.world import read_scenario

sc = read_scenario(FIXTURES / "env3.json")
laser = SensorModel.create("laser")

for v in ("bug2", "alg1", "alg2"):
    rep = run_episode(sc, make_strategy(v), laser)
    print(f"{v}: {rep.outcome.value}, {rep.total_path:.1f} m, {rep.reversals} reversal(s)")
    for e in rep.events:
        if e.kind != "grant":
            print(f"    tick {e.tick:5d}  {e.kind:<8} ({e.point.x:6.2f}, {e.point.y:6.2f})")

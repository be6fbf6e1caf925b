"""
Outcomes against the grid oracle
================================

Random worlds of convex obstacles (every fifth one with the goal boxed in).
A variant should succeed exactly when the flood fill finds a free path.

    python demos/oracle_sweep.py [n_worlds]
"""

import sys
from collections import Counter

from bugnav import SensorModel, make_strategy, run_episode
from bugnav.engine import Outcome
from bugnav.variants import VARIANT_IDS
from bugnav.world import grid_reachable, random_world

n = int(sys.argv[1]) if len(sys.argv) > 1 else 20
laser = SensorModel.create("laser")
tally = {v: Counter() for v in VARIANT_IDS}
paths = {v: 0.0 for v in VARIANT_IDS}

for seed in range(n):
    sc = random_world(seed)
    reachable = grid_reachable(sc)
    for v in VARIANT_IDS:
        rep = run_episode(sc, make_strategy(v), laser)
        agree = (rep.outcome is Outcome.SUCCESS) == reachable
        tally[v]["agree" if agree else "DISAGREE"] += 1
        if rep.outcome is Outcome.SUCCESS:
            paths[v] += rep.total_path

print(f"{n} worlds")
for v in VARIANT_IDS:
    print(f"  {v:<11}{dict(tally[v])}  total successful path {paths[v]:8.1f} m")

"""
A tour of the bundled environments
==================================

Every variant on every bundled scenario, with both laser and IR, plus one
SVG figure per laser run.  Run from the repository root:

    python demos/tour.py [output_dir]
"""

import sys
from pathlib import Path

from bugnav import SensorModel, make_strategy, run_episode
from bugnav.cli import FIXTURES
from bugnav.engine import ConfigError
from bugnav.reporting import render_svg
from bugnav.variants import VARIANT_IDS
from bugnav.world import grid_reachable, read_scenario

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

# env1 seals the goal in a box, env2 puts one block in the way, env3 is a
# spiral that makes the m-line variants come back to earlier points
for name in ("env1", "env2", "env3", "disc"):
    sc = read_scenario(FIXTURES / f"{name}.json")
    reach = "reachable" if grid_reachable(sc) else "unreachable"
    print(f"\n{name}: {len(sc.obstacles)} obstacles, goal {reach}")
    for sensor in ("laser", "ir"):
        for v in VARIANT_IDS:
            try:
                rep = run_episode(sc, make_strategy(v, sc.variant), SensorModel.create(sensor, sc.sensor))
            except ConfigError as exc:
                print(f"  {v:<11}{sensor:<6}-- {exc}")
                continue
            print(
                f"  {v:<11}{sensor:<6}{rep.outcome.value:<8} path {rep.total_path:7.2f} m"
                f"  ticks {rep.ticks:5d}  hits {len(rep.hit_points)}  reversals {rep.reversals}"
            )
            if sensor == "laser":
                (out / f"{name}_{v}.svg").write_text(render_svg(rep, sc))

print(f"\nfigures in {out}/")

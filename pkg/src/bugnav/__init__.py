"""Bug-family navigation workbench: a generic Bug engine, seven variants,
virtual sensors, a kinematic simulator and a reachability oracle."""

from .engine import ConfigError, EngineParams, Mode, NavState, Outcome, RunReport, run_episode
from .geometry import Point, Polygon, Pose, World
from .sensors import SensorModel, SensorView
from .simulator import Command, ControlParams, RobotState
from .variants import VARIANT_IDS, VariantParams, make_strategy
from .world import Scenario, grid_reachable, load_scenario, random_world, read_scenario

__version__ = "0.1.0"

__all__ = [
    "Command",
    "ConfigError",
    "ControlParams",
    "EngineParams",
    "Mode",
    "NavState",
    "Outcome",
    "Point",
    "Polygon",
    "Pose",
    "RobotState",
    "RunReport",
    "Scenario",
    "SensorModel",
    "SensorView",
    "VARIANT_IDS",
    "VariantParams",
    "World",
    "grid_reachable",
    "load_scenario",
    "make_strategy",
    "random_world",
    "read_scenario",
    "run_episode",
]

"""Balanced multi-UAV patrol planning.

Pipeline: partition cruise points among UAVs (:mod:`.assignment`), order
each UAV's visits (:mod:`.routing`), then optimise every leg's trajectory,
offload schedule and CPU frequency (:mod:`.trajectory`). :mod:`.harness`
runs complete strategies and writes comparison tables and plots.
"""
from .scenario import Scenario, generate_scenario, load_scenario, save_scenario

__version__ = "0.1.0"

__all__ = ["Scenario", "generate_scenario", "load_scenario", "save_scenario", "__version__"]

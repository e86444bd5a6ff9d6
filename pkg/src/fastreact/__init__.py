"""Simulation and barrier certification for u_t = Lap u - k u v, v_t = -k u^m3 v^m4."""
__version__ = "0.1.0"

from .core import (Field, Grid, InitialData, ProblemSpec, Trajectory, build_grid, disk_problem,
                   eval_initial_data, p1_problem, signed_distance)
from .errors import AssumptionError, ConfigurationError, DomainError, NumericalFailure, SegregationError
from .simulator import evolve, run, strang_step

__all__ = [
    "AssumptionError", "ConfigurationError", "DomainError", "Field", "Grid", "InitialData",
    "NumericalFailure", "ProblemSpec", "SegregationError", "Trajectory", "build_grid", "disk_problem",
    "eval_initial_data", "evolve", "p1_problem", "run", "signed_distance", "strang_step",
]

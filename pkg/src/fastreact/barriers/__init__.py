"""Barrier constructions and their numerical certification."""
from .assembly import GlobalBarrier, assemble_global_supersolution, assembly_parameters, assembly_threshold
from .cosh import cosh_barrier, cosh_threshold
from .heat import HeatBarrier, enlarged_heat_barrier, offsets_for, search_d
from .ode import ode_barrier, ode_threshold
from .patch import patch_min
from .profile import BarrierProfile, ConstructionFailure
from .scan import InsufficientSampling, ResidualReport, empirical_threshold, residual_scan
from .traveling import traveling_supersolution, traveling_threshold

__all__ = [
    "BarrierProfile", "ConstructionFailure", "GlobalBarrier", "HeatBarrier", "InsufficientSampling",
    "ResidualReport", "assemble_global_supersolution", "assembly_parameters", "assembly_threshold",
    "cosh_barrier", "cosh_threshold", "empirical_threshold", "enlarged_heat_barrier", "ode_barrier",
    "ode_threshold", "offsets_for", "patch_min", "residual_scan", "search_d", "traveling_supersolution",
    "traveling_threshold",
]

"""Balanced-allocation simulation, condition checking and drift verification."""

from .processes import AllocationEvent, Kind, ProcessConfig, ProcessState, parse_process, simulate, step
from .rng import RandomStream
from .state import LoadState, PotentialReport, gap, new_state, potentials, quantile, scaled_loads

__version__ = "0.1.0"

__all__ = [
    "AllocationEvent", "Kind", "LoadState", "PotentialReport", "ProcessConfig", "ProcessState", "RandomStream",
    "gap", "new_state", "parse_process", "potentials", "quantile", "scaled_loads", "simulate", "step",
]

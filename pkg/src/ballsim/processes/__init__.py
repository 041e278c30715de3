"""Allocation processes: configs, the reference step, and compiled drivers."""

from .config import Kind, ProcessConfig, parse_process
from .simulate import (Runner, Trace, TrajectoryPoint, record_trace, run_balls, simulate)
from .step import AllocationEvent, ProcessState, overpacking_placements, placements_for, step

__all__ = [
    "AllocationEvent", "Kind", "ProcessConfig", "ProcessState", "Runner", "Trace", "TrajectoryPoint",
    "overpacking_placements", "parse_process", "placements_for", "record_trace", "run_balls", "simulate", "step",
]

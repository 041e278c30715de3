"""Experiment drivers, verification suites and the command-line interface."""

from .experiments import gap_histogram, lowerbound_probe, oracle_report, scaling_rows, start_state, trajectory_rows
from .spec import ExperimentSpec, GapHistogram
from .suites import SUITES, run_suite

__all__ = [
    "ExperimentSpec", "GapHistogram", "SUITES", "gap_histogram", "lowerbound_probe", "oracle_report",
    "run_suite", "scaling_rows", "start_state", "trajectory_rows",
]

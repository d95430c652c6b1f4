"""Experiment drivers, rate fitting, file I/O and the command-line interface."""

from .cli import run_cli
from .config import ExperimentConfig, load_config, parse_config
from .ergodize import ergodization_probe
from .rates import ConvergenceReport, fit_loglog, rate_experiment
from .sharpness import sharpness_example

__all__ = [
    "ConvergenceReport",
    "ExperimentConfig",
    "ergodization_probe",
    "fit_loglog",
    "load_config",
    "parse_config",
    "rate_experiment",
    "run_cli",
    "sharpness_example",
]

"""Experiment harness: instances, reduced suites, ECDFs, energy datasets, CLI."""

from .data import BEST_KNOWN, InstanceError, qubo_from_json, qubo_to_json, resolve, resolve_one, synthetic_a_series
from .ecdf import EcdfReport, compute_ecdf
from .energy import EnergyDataset, energy_distribution_export
from .experiment import ConfigError, ExperimentSpec, load_result, run_experiment
from .reduce import make_reduced_suite

__all__ = [
    "BEST_KNOWN",
    "ConfigError",
    "EcdfReport",
    "EnergyDataset",
    "ExperimentSpec",
    "InstanceError",
    "compute_ecdf",
    "energy_distribution_export",
    "load_result",
    "make_reduced_suite",
    "qubo_from_json",
    "qubo_to_json",
    "resolve",
    "resolve_one",
    "run_experiment",
    "synthetic_a_series",
]

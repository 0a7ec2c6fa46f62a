"""Experiment orchestration: config loading, the run itself and report rebuilding."""

from .config import ConfigError, DatasetSpec, DetectorSpec, ExperimentConfig, load_config, parse_config
from .report import ReportError, build_aggregates
from .runner import RunReport, derive_seed, run_experiment, similarity_cell

__all__ = [
    "ConfigError",
    "DatasetSpec",
    "DetectorSpec",
    "ExperimentConfig",
    "ReportError",
    "RunReport",
    "build_aggregates",
    "derive_seed",
    "load_config",
    "parse_config",
    "run_experiment",
    "similarity_cell",
]

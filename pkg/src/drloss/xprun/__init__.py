"""Experiment harness: configuration, suites, and reports."""

from .config import KINDS, ConfigError, ExperimentConfig, load_config
from .report import ExperimentReport, emit_report, read_csv_sections, render_csv, render_json
from .suites import (
    SUITES,
    run_agnostic,
    run_derand_certifier,
    run_derand_classifier,
    run_double_sampling,
    run_hoeffding,
    run_model1,
    run_model2,
    run_realizable,
    run_smoothing,
    run_suite,
)

__all__ = [
    "KINDS",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "SUITES",
    "emit_report",
    "load_config",
    "read_csv_sections",
    "render_csv",
    "render_json",
    "run_agnostic",
    "run_derand_certifier",
    "run_derand_classifier",
    "run_double_sampling",
    "run_hoeffding",
    "run_model1",
    "run_model2",
    "run_realizable",
    "run_smoothing",
    "run_suite",
]

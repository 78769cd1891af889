"""Experiment sweeps, configuration, reporting, and verification suites."""
from .catalog import (
    ALPHAS_DEG,
    ETA_MIN,
    run_custom,
    run_dd_angle_sweep,
    run_dd_shapes,
    run_dn_shapes,
    run_experiment,
    run_internal_correction,
    run_internal_shapes,
    svg_kinds,
)
from .checks import SuiteResult, format_report, verify
from .cli import main
from .config import DEFAULT_SIZES, ExperimentConfig, load_config, parse_config
from .report import COLUMNS, ResultRow, emit_csv, emit_svg, read_csv

__all__ = [
    "ALPHAS_DEG",
    "COLUMNS",
    "DEFAULT_SIZES",
    "ETA_MIN",
    "ExperimentConfig",
    "ResultRow",
    "SuiteResult",
    "emit_csv",
    "emit_svg",
    "format_report",
    "load_config",
    "main",
    "parse_config",
    "read_csv",
    "run_custom",
    "run_dd_angle_sweep",
    "run_dd_shapes",
    "run_dn_shapes",
    "run_experiment",
    "run_internal_correction",
    "run_internal_shapes",
    "svg_kinds",
    "verify",
]

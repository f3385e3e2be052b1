"""Experiment orchestration: configs, paired batch runs, CSV/SVG output, CLI."""
from .config import AgentSpec, ConfigError, ExperimentConfig, load_config, parse_config
from .output import aggregate_csv, emit_csv, emit_plot, raw_csv, svg_plot
from .runner import Aggregate, BatchResult, RunResult, aggregate, run_batch, run_episode

__all__ = [
    "AgentSpec",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "Aggregate",
    "BatchResult",
    "RunResult",
    "aggregate",
    "run_batch",
    "run_episode",
    "aggregate_csv",
    "emit_csv",
    "emit_plot",
    "raw_csv",
    "svg_plot",
]

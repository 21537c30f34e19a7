"""Experiment presets, run directories and the command-line interface."""

from .config import DEFAULTS, EXPERIMENTS, config_hash, default_config, emit, load, parse, resolve
from .experiments import DRIVERS, Outcome, canonical_preset, ladder_for_preset
from .runner import OUTPUT_ENV, RunRecord, rerun, run, summary_hash

__all__ = [
    "DEFAULTS", "EXPERIMENTS", "config_hash", "default_config", "emit", "load", "parse", "resolve",
    "DRIVERS", "Outcome", "canonical_preset", "ladder_for_preset",
    "OUTPUT_ENV", "RunRecord", "rerun", "run", "summary_hash",
]

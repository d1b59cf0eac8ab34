"""Seeded Monte Carlo experiment harness."""

from .config import ConfigError, expand, load, resolve
from .experiments import RUNNERS, lookup, run_experiment

__all__ = ["ConfigError", "expand", "load", "resolve", "RUNNERS", "lookup", "run_experiment"]

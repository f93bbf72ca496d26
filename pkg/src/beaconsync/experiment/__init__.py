"""Scenario configuration, simulation runs, statistics and the command line."""

from .config import ScenarioConfig, ScenarioError, load_scenario
from .runner import RunResult, run_scenario
from .stats import OffsetSample, SummaryStats, summarize, summarize_errors

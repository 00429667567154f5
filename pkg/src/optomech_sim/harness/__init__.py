"""Configuration files, scenario runners, sweep output and the command line."""

from .config import ScenarioConfig, load
from .results import SweepResult
from .scenarios import RUNNERS, run

__all__ = ["RUNNERS", "ScenarioConfig", "SweepResult", "load", "run"]

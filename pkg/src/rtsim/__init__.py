"""rtsim: discrete-event model of destination-side NPA->SPA reverse
translation (Link MMU / Link TLB hierarchies) under All-to-All collectives
on UALink-style scale-up GPU pods."""

from .config import SimConfig, load_config
from .metrics import outcome_breakdown, overhead_vs_ideal, rt_fraction
from .runner import run_pair, sweep
from .sim import Simulation, run_simulation

__all__ = [
    "SimConfig", "load_config", "Simulation", "run_simulation",
    "run_pair", "sweep", "overhead_vs_ideal", "rt_fraction",
    "outcome_breakdown",
]

__version__ = "0.1.0"

"""Prescribed-time leader-following consensus for high-order multi-agent systems."""

from .engine import SimConfig, SimResult, run, sweep_agent_count, sweep_initial_norm, sweep_tf
from .scenario import Scenario, load, load_bundled, parse_and_validate
from .tbg import build_basis, evaluate
from .topology import Network

__all__ = [
    "Network",
    "Scenario",
    "SimConfig",
    "SimResult",
    "build_basis",
    "evaluate",
    "load",
    "load_bundled",
    "parse_and_validate",
    "run",
    "sweep_agent_count",
    "sweep_initial_norm",
    "sweep_tf",
]

__version__ = "0.1.0"

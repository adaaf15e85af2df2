"""Coded-caching multicast scheduling and fairness simulation for multi-AP WLANs."""

from . import baselines, coded_cache, dpp, fair_solver, harness, rate_enum, scenario, topology

__all__ = [
    "baselines",
    "coded_cache",
    "dpp",
    "fair_solver",
    "harness",
    "rate_enum",
    "scenario",
    "topology",
]

__version__ = "0.1.0"

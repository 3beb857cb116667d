"""Deterministic discrete-event simulation of the storage overlay and user workflows."""
from .events import EventLoop, TraceEvent
from .experiments import (
    AvailabilityReport,
    mean_lookup_hops,
    run_adversary_experiment,
    run_adversary_sweep,
    run_newsfeed_experiment,
    run_post_experiment,
    run_wall_experiment,
)
from .network import CostModel, NetworkConfig, SimEnvironment, SimNetwork, SimTransport, build_network
from .results import CSV_COLUMNS, ExperimentResult, TrialRecord, emit_results, mean_ci

__all__ = [
    "AvailabilityReport",
    "CSV_COLUMNS",
    "CostModel",
    "EventLoop",
    "ExperimentResult",
    "NetworkConfig",
    "SimEnvironment",
    "SimNetwork",
    "SimTransport",
    "TraceEvent",
    "TrialRecord",
    "build_network",
    "emit_results",
    "mean_ci",
    "mean_lookup_hops",
    "run_adversary_experiment",
    "run_adversary_sweep",
    "run_newsfeed_experiment",
    "run_post_experiment",
    "run_wall_experiment",
]

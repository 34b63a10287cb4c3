from .bench import COMPONENTS, BenchReport, BenchRow, linear_fit, run_microbench
from .engine import NS_PER_MS, NS_PER_S, EventLoop
from .experiments import (
    FAULT_KINDS,
    Fault,
    RttSample,
    RttScenario,
    SendReport,
    SendResult,
    choose_path,
    clear_faults,
    index_vector,
    inject_fault,
    run_rtt_experiment,
    run_send,
    samples_csv,
)
from .network import Diagnostic, Network, SimulationError, TrafficStats, UnknownAs, run_beaconing
from .topology import ConfigError, Jitter, Topology, load_topology, topology_from_dict

__all__ = [
    "COMPONENTS",
    "BenchReport",
    "BenchRow",
    "linear_fit",
    "run_microbench",
    "NS_PER_MS",
    "NS_PER_S",
    "EventLoop",
    "FAULT_KINDS",
    "Fault",
    "RttSample",
    "RttScenario",
    "SendReport",
    "SendResult",
    "choose_path",
    "clear_faults",
    "index_vector",
    "inject_fault",
    "run_rtt_experiment",
    "run_send",
    "samples_csv",
    "Diagnostic",
    "Network",
    "SimulationError",
    "TrafficStats",
    "UnknownAs",
    "run_beaconing",
    "ConfigError",
    "Jitter",
    "Topology",
    "load_topology",
    "topology_from_dict",
]

"""Hierarchical cluster-based dynamic load balancing, simulated.

Nodes are grouped into clusters, each with a coordinator.  A round first
balances inside every cluster; clusters still over capacity circulate a
token around the coordinator ring to learn every cluster's total, then all
coordinators compute the same inter-cluster plan and ship excess load.
"""

from .loads import ClusterCapacity, LoadClass, Thresholds, classify_cluster_load, classify_node_load
from .metrics import Metrics, check_knowledge_time, check_theorem2, check_theorem3, count_high, std_dev, summarize
from .planner import (
    PlannerError, TransferPlan, TransferRecord, apply_transfers, global_balance_plan,
    local_balance_plan, receiver_assignment, sender_assignment,
)
from .scenario import (
    ConfigError, LoadSpec, ScenarioConfig, SweepSpec, default_sweep_spec, generate_loads,
    parse_config, run_scenario, worked_example_config,
)
from .sim import InvariantViolation, NonQuiescence, PayloadTime, RoundResult, Topology, build_topology, run_round

__all__ = [
    "ClusterCapacity", "LoadClass", "Thresholds", "classify_cluster_load", "classify_node_load",
    "Metrics", "check_knowledge_time", "check_theorem2", "check_theorem3", "count_high", "std_dev",
    "summarize", "PlannerError", "TransferPlan", "TransferRecord", "apply_transfers",
    "global_balance_plan", "local_balance_plan", "receiver_assignment", "sender_assignment",
    "ConfigError", "LoadSpec", "ScenarioConfig", "SweepSpec", "default_sweep_spec",
    "generate_loads", "parse_config", "run_scenario", "worked_example_config",
    "InvariantViolation", "NonQuiescence", "PayloadTime", "RoundResult", "Topology",
    "build_topology", "run_round",
]

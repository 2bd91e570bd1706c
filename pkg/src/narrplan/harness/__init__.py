"""Benchmark harness: agents, attempt runners and result tables."""

from .agents import (
    AgentReply,
    AgentTransportError,
    CorruptingAgent,
    OracleAgent,
    PlannerAgent,
    RemoteAgent,
    ReplayAgent,
    agent_from_spec,
)
from .report import SummaryRow, SummaryTable, aggregate
from .runner import (
    BUDGET_EXHAUSTED,
    INVALID_PLAN,
    PARSE_FAILURE,
    SUCCESS,
    AttemptRecord,
    RunConfig,
    load_records,
    run_attempt,
    run_calibrated,
    run_many,
    run_one_off,
)

__all__ = [
    "AgentReply", "AgentTransportError", "CorruptingAgent", "OracleAgent", "PlannerAgent",
    "RemoteAgent", "ReplayAgent", "agent_from_spec", "SummaryRow", "SummaryTable", "aggregate",
    "BUDGET_EXHAUSTED", "INVALID_PLAN", "PARSE_FAILURE", "SUCCESS", "AttemptRecord", "RunConfig",
    "load_records", "run_attempt", "run_calibrated", "run_many", "run_one_off",
]

"""
Analytic latency engine, simulation oracle and scenario tools for reliable DDS publish/subscribe.
"""
from .errors import (
    CycleMismatchError, DistributionError, DomainError, IncommensurableError, ModelError,
    ReferenceDataError, ScenarioError,
)
from .metrics import aggregate_latency, analyze, jitter, mdr, offset_model, phase_latency
from .model import (
    DerivedParams, LatencyMetrics, OffsetModel, ScenarioParams, SolverConfig, SteadyStateCycle,
    UnackedDistribution, ValidationReport, derive_params, validate_scenario,
)
from .operators import gamma_kernel, hb_apply, pr_fail, pub_apply
from .reference import ErrorSummary, ReferenceRow, load_reference, summarize_errors
from .simulator import SimConfig, SimResult, empirical_metrics, run_sim
from .steady_state import build_timeline, cycle_distance, period_R, solve_steady_state

__all__ = [
    "CycleMismatchError", "DistributionError", "DomainError", "IncommensurableError", "ModelError",
    "ReferenceDataError", "ScenarioError",
    "aggregate_latency", "analyze", "jitter", "mdr", "offset_model", "phase_latency",
    "DerivedParams", "LatencyMetrics", "OffsetModel", "ScenarioParams", "SolverConfig", "SteadyStateCycle",
    "UnackedDistribution", "ValidationReport", "derive_params", "validate_scenario",
    "gamma_kernel", "hb_apply", "pr_fail", "pub_apply",
    "ErrorSummary", "ReferenceRow", "load_reference", "summarize_errors",
    "SimConfig", "SimResult", "empirical_metrics", "run_sim",
    "build_timeline", "cycle_distance", "period_R", "solve_steady_state",
]

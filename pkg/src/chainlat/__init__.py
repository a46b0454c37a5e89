"""Worst-case end-to-end latency of cause-effect chains under FPPS."""

from .analysis import (AnalysisResult, BoundKind, Mode, analyze, analyze_decomposed, analyze_full,
                       analyze_relaxed)
from .engine import SolveConfig, check_witness, solve_max
from .horizon import compute_horizon, compute_instance_counts, relevant_tasks
from .model import (Bounded, Chain, Chained, CommParadigm, Periodic, Sporadic, SystemModel, TaskSpec,
                    ValidationError, validate_chain, validate_system)

__all__ = [
    "AnalysisResult", "BoundKind", "Mode", "analyze", "analyze_decomposed", "analyze_full",
    "analyze_relaxed", "SolveConfig", "check_witness", "solve_max", "compute_horizon",
    "compute_instance_counts", "relevant_tasks", "Bounded", "Chain", "Chained", "CommParadigm",
    "Periodic", "Sporadic", "SystemModel", "TaskSpec", "ValidationError", "validate_chain",
    "validate_system",
]
__version__ = "0.1.0"

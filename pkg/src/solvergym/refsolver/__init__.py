"""Embedded reference LP/MILP solver: model format, simplex, branch and bound."""

from .branch_bound import DEFAULT_NODE_BUDGET, milp_solve
from .model import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    Constraint,
    LinearModel,
    ModelError,
    NodeBudgetExceeded,
    SolveResult,
    SolverNumericsError,
    TimeLimitExceeded,
    check_feasible,
    emit_result_text,
)
from .parse import ParseError, parse_model
from .simplex import simplex_solve

__all__ = [
    "Constraint",
    "DEFAULT_NODE_BUDGET",
    "INFEASIBLE",
    "LinearModel",
    "ModelError",
    "NodeBudgetExceeded",
    "OPTIMAL",
    "ParseError",
    "SolveResult",
    "SolverNumericsError",
    "TimeLimitExceeded",
    "UNBOUNDED",
    "check_feasible",
    "emit_result_text",
    "milp_solve",
    "parse_model",
    "simplex_solve",
    "solve_model_text",
]


def solve_model_text(text: str, time_limit: float | None = None) -> SolveResult:
    """Parse and solve model text end to end (integrality respected)."""
    return milp_solve(parse_model(text), time_limit=time_limit)

"""Core types for the embedded LP/MILP reference solver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

OPTIMAL = "OPTIMAL"
INFEASIBLE = "INFEASIBLE"
UNBOUNDED = "UNBOUNDED"

# Solver tolerances, deliberately tighter than any reward tolerance so that
# solver noise can never flip a reward decision.
FEASIBILITY_TOL = 1e-7
INTEGRALITY_TOL = 1e-6
BOUND_TOL = 1e-9
GAP_TOL = 1e-9
PIVOT_TOL = 1e-9


class ModelError(ValueError):
    """A structurally invalid model (bad bounds, unknown comparator, ...)."""


class SolverNumericsError(RuntimeError):
    """Numeric instability the solver refuses to push through silently."""


class NodeBudgetExceeded(RuntimeError):
    """Branch and bound ran out of nodes; the instance is beyond desk scale."""


class TimeLimitExceeded(RuntimeError):
    """A solve hit the deadline imposed by the caller."""


@dataclass(frozen=True)
class Constraint:
    coeffs: dict[str, float]
    comparator: str  # "<=", ">=" or "="
    rhs: float
    name: str | None = None


@dataclass
class LinearModel:
    """An LP/MILP: linear objective, linear constraints, bounds, integrality.

    Bounds default to [0, +inf); a -inf lower bound makes a variable free.
    Every variable referenced anywhere receives a bound entry on construction.
    """

    sense: str  # "maximize" | "minimize"
    objective: dict[str, float]
    constraints: list[Constraint] = field(default_factory=list)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    integrality: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.sense not in ("maximize", "minimize"):
            raise ModelError(f"unknown objective sense {self.sense!r}")
        for con in self.constraints:
            if con.comparator not in ("<=", ">=", "="):
                raise ModelError(f"unknown comparator {con.comparator!r}")
        for var in self.variables():
            lo, hi = self.bounds.setdefault(var, (0.0, math.inf))
            if math.isnan(lo) or math.isnan(hi):
                raise ModelError(f"NaN bound on variable {var!r}")
            if lo > hi:
                raise ModelError(f"variable {var!r} has lower bound {lo} > upper bound {hi}")

    def variables(self) -> list[str]:
        """All referenced variables in sorted (deterministic) order."""
        names = set(self.objective)
        for con in self.constraints:
            names.update(con.coeffs)
        names.update(self.bounds)
        names.update(self.integrality)
        return sorted(names)

    def objective_at(self, assignment: dict[str, float]) -> float:
        """Objective value of an assignment, summed in sorted-variable order."""
        return sum(coef * assignment.get(var, 0.0) for var, coef in sorted(self.objective.items()))


@dataclass(frozen=True)
class SolveResult:
    status: str  # OPTIMAL | INFEASIBLE | UNBOUNDED
    objective_value: float | None = None
    assignment: dict[str, float] | None = None


def check_feasible(
    model: LinearModel,
    assignment: dict[str, float],
    feas_tol: float = FEASIBILITY_TOL,
    bound_tol: float = BOUND_TOL,
    int_tol: float = INTEGRALITY_TOL,
) -> bool:
    """True iff the assignment satisfies constraints, bounds and integrality."""
    for var, (lo, hi) in model.bounds.items():
        x = assignment.get(var, 0.0)
        if x < lo - bound_tol or x > hi + bound_tol:
            return False
    for var in model.integrality:
        x = assignment.get(var, 0.0)
        if abs(x - round(x)) > int_tol:
            return False
    for con in model.constraints:
        lhs = sum(coef * assignment.get(var, 0.0) for var, coef in sorted(con.coeffs.items()))
        if con.comparator == "<=" and lhs > con.rhs + feas_tol:
            return False
        if con.comparator == ">=" and lhs < con.rhs - feas_tol:
            return False
        if con.comparator == "=" and abs(lhs - con.rhs) > feas_tol:
            return False
    return True


def emit_result_text(result: SolveResult) -> str:
    """Render a solve result in the standard output convention.

    OPTIMAL results carry the objective (up to 12 significant digits); every
    other status reports that no best solution exists.
    """
    if result.status == OPTIMAL:
        return f"STATUS: {OPTIMAL}\nJust print the best solution: {result.objective_value:.12g}"
    return f"STATUS: {result.status}\nNo Best Solution"

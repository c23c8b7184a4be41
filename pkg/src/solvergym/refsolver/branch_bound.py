"""Branch and bound over LP relaxations for mixed-integer models.

Best-bound node selection; branching on the integer variable whose
fractional part is closest to 0.5 (ties to the lexicographically smallest
name); pruning by bound with an absolute gap tolerance.  All choices are
fixed so results are bit-deterministic.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import replace

from .model import (
    GAP_TOL,
    INFEASIBLE,
    INTEGRALITY_TOL,
    OPTIMAL,
    UNBOUNDED,
    LinearModel,
    NodeBudgetExceeded,
    SolveResult,
    SolverNumericsError,
    TimeLimitExceeded,
    check_feasible,
)
from .simplex import simplex_solve

DEFAULT_NODE_BUDGET = 100_000


def _fractional_vars(model: LinearModel, assignment: dict[str, float]) -> list[tuple[str, float]]:
    out = []
    for var in sorted(model.integrality):
        x = assignment.get(var, 0.0)
        if abs(x - round(x)) > INTEGRALITY_TOL:
            out.append((var, x))
    return out


def _branch_var(fractional: list[tuple[str, float]]) -> tuple[str, float]:
    # Closest fractional part to 0.5; list is name-sorted so min() keeps the
    # lexicographically smallest name on ties.
    return min(fractional, key=lambda item: abs((item[1] - math.floor(item[1])) - 0.5))


def _snapped_candidate(model: LinearModel, assignment: dict[str, float]) -> dict[str, float] | None:
    candidate = dict(assignment)
    for var in model.integrality:
        candidate[var] = float(round(candidate[var]))
    if not check_feasible(model, candidate):
        return None
    return candidate


def milp_solve(
    model: LinearModel,
    node_budget: int = DEFAULT_NODE_BUDGET,
    deadline: float | None = None,
    time_limit: float | None = None,
) -> SolveResult:
    """Solve a MILP exactly (to tolerance) by branch and bound.

    Raises NodeBudgetExceeded when more than ``node_budget`` LP relaxations
    would be required, and TimeLimitExceeded past the deadline.
    """
    if time_limit is not None and deadline is None:
        deadline = time.monotonic() + time_limit
    maximize = model.sense == "maximize"
    better = (lambda a, b: a > b + GAP_TOL) if maximize else (lambda a, b: a < b - GAP_TOL)

    nodes_used = 0

    def relax(bounds: dict[str, tuple[float, float]]) -> SolveResult:
        nonlocal nodes_used
        nodes_used += 1
        if nodes_used > node_budget:
            raise NodeBudgetExceeded(
                f"branch and bound exceeded the {node_budget}-node budget"
            )
        return simplex_solve(replace(model, bounds=dict(bounds)), deadline=deadline)

    root = relax(model.bounds)
    if root.status != OPTIMAL:
        return SolveResult(status=root.status)
    if not model.integrality:
        return root

    best_value: float | None = None
    best_assignment: dict[str, float] | None = None
    counter = 0
    # Heap keyed so the best relaxation bound pops first.
    key = (lambda v: -v) if maximize else (lambda v: v)
    heap: list[tuple[float, int, dict[str, tuple[float, float]], SolveResult]] = [
        (key(root.objective_value), counter, dict(model.bounds), root)
    ]

    while heap:
        if deadline is not None and time.monotonic() > deadline:
            raise TimeLimitExceeded("branch and bound hit the solve deadline")
        _, _, bounds, lp = heapq.heappop(heap)
        if best_value is not None and not better(lp.objective_value, best_value):
            break  # best-bound order: no remaining node can improve
        fractional = _fractional_vars(model, lp.assignment)
        if not fractional:
            candidate = _snapped_candidate(model, lp.assignment)
            if candidate is None:
                raise SolverNumericsError(
                    "integral relaxation point failed feasibility after rounding"
                )
            value = model.objective_at(candidate)
            if best_value is None or better(value, best_value):
                best_value, best_assignment = value, candidate
            continue
        var, x = _branch_var(fractional)
        lo, hi = bounds[var]
        floor_x = math.floor(x)
        for child_lo, child_hi in ((lo, float(floor_x)), (float(floor_x + 1), hi)):
            if child_lo > child_hi:
                continue
            child_bounds = dict(bounds)
            child_bounds[var] = (child_lo, child_hi)
            child = relax(child_bounds)
            if child.status != OPTIMAL:
                continue  # infeasible subproblem (restriction cannot be unbounded)
            if best_value is not None and not better(child.objective_value, best_value):
                continue
            counter += 1
            heapq.heappush(heap, (key(child.objective_value), counter, child_bounds, child))

    if best_assignment is None:
        return SolveResult(status=INFEASIBLE)
    return SolveResult(status=OPTIMAL, objective_value=best_value, assignment=best_assignment)

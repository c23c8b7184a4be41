"""Two-phase primal simplex over a dense tableau, with Bland's rule.

Correctness and determinism over speed: instances here are desk scale.
Bland's rule is applied to both the entering and the leaving choice, which
guarantees termination without perturbation tricks.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .model import (
    FEASIBILITY_TOL,
    INFEASIBLE,
    OPTIMAL,
    PIVOT_TOL,
    UNBOUNDED,
    LinearModel,
    SolveResult,
    SolverNumericsError,
    TimeLimitExceeded,
)

_RATIO_TIE_TOL = 1e-12
_REDUCED_COST_TOL = 1e-9
_DEGENERATE_PIVOT_TOL = 1e-12


class _Deadline:
    def __init__(self, deadline: float | None):
        self.deadline = deadline

    def check(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise TimeLimitExceeded("simplex hit the solve deadline")


def _substituted_form(model: LinearModel):
    """Rewrite every variable as an affine form over nonnegative columns.

    Returns (forms, n_cols, extra_rows) where forms maps each variable to
    (constant, [(col, coef), ...]) and extra_rows holds the upper-bound rows
    for doubly bounded variables.
    """
    forms: dict[str, tuple[float, list[tuple[int, float]]]] = {}
    extra_rows: list[tuple[dict[int, float], str, float]] = []
    col = 0
    for var in model.variables():
        lo, hi = model.bounds[var]
        if lo == -math.inf and hi == math.inf:
            forms[var] = (0.0, [(col, 1.0), (col + 1, -1.0)])
            col += 2
        elif lo == -math.inf:
            forms[var] = (hi, [(col, -1.0)])
            col += 1
        else:
            forms[var] = (lo, [(col, 1.0)])
            if hi != math.inf:
                extra_rows.append(({col: 1.0}, "<=", hi - lo))
            col += 1
    return forms, col, extra_rows


def _pivot(tableau: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0
    basis[row] = col


def _choose_leaving(tableau: np.ndarray, basis: list[int], col: int) -> int | None:
    """Min-ratio row; ties broken by smallest basis index (Bland).

    Returns None when the column is nonpositive (unbounded direction); raises
    when only degenerate near-zero pivots are available.
    """
    column = tableau[:-1, col]
    rhs = tableau[:-1, -1]
    eligible = column > PIVOT_TOL
    if not eligible.any():
        if (column > _DEGENERATE_PIVOT_TOL).any():
            raise SolverNumericsError(
                f"pivot magnitudes in column {col} fell below {PIVOT_TOL} with no alternative"
            )
        return None
    ratios = np.full(column.shape, math.inf)
    ratios[eligible] = rhs[eligible] / column[eligible]
    best = ratios.min()
    cutoff = best + _RATIO_TIE_TOL * (1.0 + abs(best))
    tied = [i for i in range(len(ratios)) if eligible[i] and ratios[i] <= cutoff]
    return min(tied, key=lambda i: basis[i])


def _run_phase(
    tableau: np.ndarray,
    basis: list[int],
    enterable: int,
    deadline: _Deadline,
    phase: int,
) -> str:
    """Iterate pivots until optimality or an unbounded ray; returns a status."""
    max_iters = 2000 + 200 * (tableau.shape[0] + tableau.shape[1])
    for _ in range(max_iters):
        deadline.check()
        reduced = tableau[-1, :enterable]
        entering_candidates = np.nonzero(reduced < -_REDUCED_COST_TOL)[0]
        if entering_candidates.size == 0:
            return OPTIMAL
        col = int(entering_candidates[0])  # Bland: smallest index
        row = _choose_leaving(tableau, basis, col)
        if row is None:
            if phase == 1:
                raise SolverNumericsError("phase-one objective is unbounded (numeric drift)")
            return UNBOUNDED
        _pivot(tableau, basis, row, col)
    raise SolverNumericsError("simplex exceeded its iteration cap")


def simplex_solve(model: LinearModel, deadline: float | None = None) -> SolveResult:
    """Solve the LP relaxation (integrality ignored).

    Returns OPTIMAL with a vertex assignment, INFEASIBLE when phase one's
    artificial objective stays positive beyond tolerance, or UNBOUNDED when
    an entering column has no blocking ratio.
    """
    clock = _Deadline(deadline)
    forms, n_struct, extra_rows = _substituted_form(model)

    rows: list[tuple[dict[int, float], str, float]] = []
    for con in model.constraints:
        coeffs: dict[int, float] = {}
        rhs = con.rhs
        for var, coef in sorted(con.coeffs.items()):
            const, cols = forms[var]
            rhs -= coef * const
            for c, scale in cols:
                coeffs[c] = coeffs.get(c, 0.0) + coef * scale
        rows.append((coeffs, con.comparator, rhs))
    rows.extend(extra_rows)

    m = len(rows)
    n_slack = sum(1 for _, cmp, _ in rows if cmp != "=")
    n_art = m  # at most one artificial per row; unused ones are dropped below
    width = n_struct + n_slack + n_art + 1
    tableau = np.zeros((m + 1, width))
    basis: list[int] = []
    slack_at = n_struct
    art_at = n_struct + n_slack
    art_cols: list[int] = []

    for i, (coeffs, cmp, rhs) in enumerate(rows):
        for c, coef in coeffs.items():
            tableau[i, c] = coef
        tableau[i, -1] = rhs
        if rhs < 0:
            tableau[i, :] *= -1.0
            cmp = {"<=": ">=", ">=": "<=", "=": "="}[cmp]
        if cmp == "<=":
            tableau[i, slack_at] = 1.0
            basis.append(slack_at)
            slack_at += 1
        elif cmp == ">=":
            tableau[i, slack_at] = -1.0
            slack_at += 1
            tableau[i, art_at] = 1.0
            basis.append(art_at)
            art_cols.append(art_at)
            art_at += 1
        else:
            tableau[i, art_at] = 1.0
            basis.append(art_at)
            art_cols.append(art_at)
            art_at += 1

    art_start = n_struct + n_slack
    tableau = np.delete(tableau, range(art_at, width - 1), axis=1)

    # Phase 1: minimize the sum of artificials.
    if art_cols:
        tableau[-1, art_start : tableau.shape[1] - 1] = 1.0
        for r, bvar in enumerate(basis):
            if tableau[-1, bvar] != 0.0:
                tableau[-1] -= tableau[-1, bvar] * tableau[r]
        _run_phase(tableau, basis, enterable=art_start, deadline=clock, phase=1)
        if -tableau[-1, -1] > FEASIBILITY_TOL:
            return SolveResult(status=INFEASIBLE)
        # Drive remaining artificials out of the basis (or drop redundant rows).
        drop_rows = []
        for r in range(m):
            if basis[r] >= art_start:
                entering = next(
                    (j for j in range(art_start) if abs(tableau[r, j]) > PIVOT_TOL), None
                )
                if entering is None:
                    drop_rows.append(r)
                else:
                    _pivot(tableau, basis, r, entering)
        if drop_rows:
            tableau = np.delete(tableau, drop_rows, axis=0)
            basis = [b for r, b in enumerate(basis) if r not in set(drop_rows)]

    # Phase 2: original objective (internally minimized) over structural columns.
    objective_cols = np.zeros(tableau.shape[1])
    sign = -1.0 if model.sense == "maximize" else 1.0
    for var, coef in sorted(model.objective.items()):
        _, cols = forms[var]
        for c, scale in cols:
            objective_cols[c] += sign * coef * scale
    tableau[-1, :] = objective_cols
    tableau[-1, -1] = 0.0
    for r, bvar in enumerate(basis):
        if tableau[-1, bvar] != 0.0:
            tableau[-1] -= tableau[-1, bvar] * tableau[r]

    status = _run_phase(tableau, basis, enterable=art_start, deadline=clock, phase=2)
    if status == UNBOUNDED:
        return SolveResult(status=UNBOUNDED)

    col_values = np.zeros(n_struct)
    for r, bvar in enumerate(basis):
        if bvar < n_struct:
            col_values[bvar] = tableau[r, -1]
    col_values[np.abs(col_values) < 1e-11] = 0.0

    assignment = {}
    for var in model.variables():
        const, cols = forms[var]
        assignment[var] = float(const + sum(scale * col_values[c] for c, scale in cols))
    return SolveResult(
        status=OPTIMAL,
        objective_value=float(model.objective_at(assignment)),
        assignment=assignment,
    )

"""Minimum-cost assignment with gating.

Wraps the Jonker-Volgenant solver from scipy behind a contract the pipeline
relies on: rectangular matrices, forbidden (gated) entries, maximum matching
cardinality first and total cost second, and a deterministic lexicographic
tie-break over the matched (row, col) pairs so equal-cost solutions never
depend on solver internals.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

_COST_TOL = 1e-9


@dataclass(frozen=True)
class CostMatrix:
    """Nonnegative costs with a boolean mask of forbidden pairs."""

    costs: np.ndarray
    forbidden: np.ndarray = None

    def __post_init__(self):
        c = np.asarray(self.costs, dtype=float)
        if c.ndim != 2:
            raise ValueError("costs must be a 2-D array")
        f = (np.zeros(c.shape, dtype=bool) if self.forbidden is None
             else np.asarray(self.forbidden, dtype=bool))
        if f.shape != c.shape:
            raise ValueError("forbidden mask must match the cost shape")
        allowed = c[~f]
        if allowed.size and (not np.all(np.isfinite(allowed)) or allowed.min() < 0.0):
            raise ValueError("allowed costs must be finite and nonnegative")
        object.__setattr__(self, "costs", c)
        object.__setattr__(self, "forbidden", f)

    @classmethod
    def gated(cls, costs, gate: float) -> "CostMatrix":
        """Forbid every entry strictly above the gate."""
        c = np.asarray(costs, dtype=float)
        return cls(costs=c, forbidden=c > gate)


@dataclass(frozen=True)
class Assignment:
    """Matched (row, col) pairs sorted by row, and their total cost."""

    pairs: tuple
    total_cost: float
    unmatched_rows: tuple = field(default=())
    unmatched_cols: tuple = field(default=())


def _solve_block(costs: np.ndarray, forbidden: np.ndarray):
    """One padded scipy solve. Returns (pairs sorted by row, cardinality, cost)."""
    n_rows, n_cols = costs.shape
    if n_rows == 0 or n_cols == 0 or bool(forbidden.all()):
        return [], 0, 0.0
    n = max(n_rows, n_cols)
    # Forbidden entries get a sentinel larger than any feasible total, so the
    # solver uses them only when unavoidable; padding rows/cols are free.
    big = float(np.abs(costs[~forbidden]).sum()) + 1.0
    square = np.zeros((n, n))
    square[:n_rows, :n_cols] = np.where(forbidden, big, costs)
    rows, cols = linear_sum_assignment(square)
    pairs = []
    total = 0.0
    for r, c in zip(rows, cols):
        if r < n_rows and c < n_cols and not forbidden[r, c]:
            pairs.append((int(r), int(c)))
            total += float(costs[r, c])
    pairs.sort()
    return pairs, len(pairs), total


def hungarian_assign(matrix: CostMatrix) -> Assignment:
    """Solve the gated assignment problem deterministically.

    Among all matchings of maximum cardinality and minimum total cost, the
    one whose row-sorted pair list is lexicographically smallest is
    returned. The tie-break fixes pairs row by row, re-solving the
    remainder to confirm the optimum is still reachable.
    """
    costs, forbidden = matrix.costs, matrix.forbidden
    n_rows, n_cols = costs.shape
    _, best_k, best_cost = _solve_block(costs, forbidden)

    pairs = []
    fixed_cost = 0.0
    free_rows = list(range(n_rows))
    free_cols = list(range(n_cols))
    while free_rows and best_k - len(pairs) > 0:
        r = free_rows[0]
        chosen = None
        sub_rows = free_rows[1:]
        for c in free_cols:
            if forbidden[r, c]:
                continue
            sub_cols = [cc for cc in free_cols if cc != c]
            _, k, cost = _solve_block(costs[np.ix_(sub_rows, sub_cols)],
                                      forbidden[np.ix_(sub_rows, sub_cols)])
            if (len(pairs) + 1 + k == best_k
                    and abs(fixed_cost + costs[r, c] + cost - best_cost)
                    <= _COST_TOL * max(1.0, abs(best_cost))):
                chosen = c
                break
        if chosen is None:
            # Row r stays unmatched in every optimal solution.
            free_rows.pop(0)
            continue
        pairs.append((r, chosen))
        fixed_cost += float(costs[r, chosen])
        free_rows.pop(0)
        free_cols.remove(chosen)

    matched_rows = {r for r, _ in pairs}
    matched_cols = {c for _, c in pairs}
    return Assignment(
        pairs=tuple(pairs),
        total_cost=fixed_cost,
        unmatched_rows=tuple(r for r in range(n_rows) if r not in matched_rows),
        unmatched_cols=tuple(c for c in range(n_cols) if c not in matched_cols),
    )

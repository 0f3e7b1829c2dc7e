"""Optimal percept-to-anchor association over a matching table.

``solve`` maximizes the total similarity of a one-to-one assignment using
the Hungarian method (shortest augmenting paths over row/column potentials,
O(n^3)).  Rectangular tables are padded to square with zeros internally;
padded matches never appear in the output.  Among equally good assignments
the lexicographically smallest pair list wins, which makes the result fully
deterministic; ``solve_bruteforce`` enforces the same contract by
exhaustive enumeration and exists purely as an oracle for small tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from math import inf
from typing import Sequence

import numpy as np

from .errors import ValidationError

# Two totals within this tolerance count as tied; ties fall back to the
# lexicographic comparison of pair lists.
TIE_TOLERANCE = 1e-9

_BRUTEFORCE_LIMIT = 9


@dataclass(eq=False)
class MatchingTable:
    """Similarities for percepts (rows) against anchors (columns)."""

    values: np.ndarray        # (N, M) float64, entries in [0, 1]
    row_ids: list[str]
    col_ids: list[str]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValidationError("matching table values must be 2-D")
        n, m = self.values.shape
        if len(self.row_ids) != n or len(self.col_ids) != m:
            raise ValidationError(
                f"id lists ({len(self.row_ids)}, {len(self.col_ids)}) do not match "
                f"table shape {self.values.shape}"
            )
        if len(set(self.row_ids)) != n or len(set(self.col_ids)) != m:
            raise ValidationError("matching table ids must be unique")
        if n and m:
            if not np.all(np.isfinite(self.values)):
                raise ValidationError("matching table entries must be finite")
            if self.values.min() < 0.0 or self.values.max() > 1.0:
                raise ValidationError("matching table entries must lie in [0, 1]")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class Assignment:
    """Chosen (row, column) index pairs, sorted by row, rows and columns
    each used at most once; exactly min(N, M) pairs."""

    pairs: tuple[tuple[int, int], ...]


def assignment_total(table: MatchingTable, assignment: Assignment) -> float:
    return float(sum(table.values[r, c] for r, c in assignment.pairs))


def _hungarian_min_square(cost: list[list[float]]) -> list[int]:
    """Column assigned to each row of a square cost matrix, minimizing the
    total.  Potentials formulation, 1-indexed internally."""
    n = len(cost)
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)      # p[j]: row matched to column j
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            row = cost[i0 - 1]
            u_i0 = u[i0]
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - u_i0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = [0] * n
    for j in range(1, n + 1):
        if p[j]:
            row_to_col[p[j] - 1] = j - 1
    return row_to_col


def _optimal_total(values: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> float:
    """Best achievable total over min(len(rows), len(cols)) pairs."""
    if not rows or not cols:
        return 0.0
    sub = values[np.ix_(rows, cols)]
    n = max(sub.shape)
    padded = np.zeros((n, n))
    padded[: sub.shape[0], : sub.shape[1]] = -sub   # negate: minimize
    row_to_col = _hungarian_min_square(padded.tolist())
    total = 0.0
    for r, c in enumerate(row_to_col):
        if r < sub.shape[0] and c < sub.shape[1]:
            total += float(sub[r, c])
    return total


def _greedy_upper_bound(values: np.ndarray, rows: Sequence[int], cols: Sequence[int], budget: int) -> float:
    """Cheap bound ignoring column uniqueness: sum of the ``budget`` largest
    per-row maxima."""
    if budget <= 0 or not rows or not cols:
        return 0.0
    row_max = values[np.ix_(rows, cols)].max(axis=1)
    if budget >= row_max.shape[0]:
        return float(row_max.sum())
    return float(np.sort(row_max)[-budget:].sum())


def solve(table: MatchingTable) -> Assignment:
    """Maximum-total assignment with deterministic lexicographic tie-break.

    The optimum value comes from one Hungarian solve; the pair list is then
    fixed slot by slot, choosing the smallest (row, column) whose forced
    inclusion still permits an optimal completion (verified by re-solving
    the reduced table).  Runtime is polynomial and well under the latency
    budget for the table sizes the engine produces.
    """
    n, m = table.shape
    k = min(n, m)
    if k == 0:
        return Assignment(pairs=())
    values = table.values
    best_total = _optimal_total(values, range(n), range(m))

    pairs: list[tuple[int, int]] = []
    rows_left = list(range(n))
    cols_left = list(range(m))
    needed = best_total
    k_left = k
    while k_left:
        chosen: tuple[int, int] | None = None
        for pos, r in enumerate(rows_left):
            rows_after = rows_left[pos + 1 :]
            if len(rows_after) < k_left - 1:
                break  # later rows leave too few for the remaining slots
            found = False
            for c in cols_left:
                value = float(values[r, c])
                bound = value + _greedy_upper_bound(values, rows_after, _without(cols_left, c), k_left - 1)
                if bound < needed - TIE_TOLERANCE:
                    continue
                achievable = value + _optimal_total(values, rows_after, _without(cols_left, c))
                if achievable >= needed - TIE_TOLERANCE:
                    chosen = (r, c)
                    found = True
                    break
            if found:
                break
        assert chosen is not None, "optimal completion must exist"
        r, c = chosen
        pairs.append(chosen)
        pos = rows_left.index(r)
        rows_left = rows_left[pos + 1 :]
        cols_left = _without(cols_left, c)
        needed -= float(values[r, c])
        k_left -= 1
    return Assignment(pairs=tuple(pairs))


def _without(items: list[int], drop: int) -> list[int]:
    return [x for x in items if x != drop]


def solve_bruteforce(table: MatchingTable) -> Assignment:
    """Exhaustive oracle with the same optimality and tie-break contract as
    :func:`solve`.  Rejects tables with min(N, M) > 9."""
    n, m = table.shape
    k = min(n, m)
    if k > _BRUTEFORCE_LIMIT:
        raise ValidationError(
            f"brute-force solver handles min(N, M) <= {_BRUTEFORCE_LIMIT}, got {k}"
        )
    if k == 0:
        return Assignment(pairs=())
    values = table.values
    best_total = -inf
    best_pairs: tuple[tuple[int, int], ...] | None = None
    for row_set in combinations(range(n), k):
        for col_arrangement in permutations(range(m), k):
            total = float(sum(values[r, c] for r, c in zip(row_set, col_arrangement)))
            candidate = tuple(zip(row_set, col_arrangement))
            if total > best_total + TIE_TOLERANCE:
                best_total = total
                best_pairs = candidate
            elif total >= best_total - TIE_TOLERANCE and candidate < best_pairs:
                best_pairs = candidate
    assert best_pairs is not None
    return Assignment(pairs=best_pairs)

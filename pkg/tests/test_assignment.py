from __future__ import annotations

import numpy as np
import pytest

from anchoring import Assignment, MatchingTable, solve, solve_bruteforce
from anchoring.assignment import assignment_total
from anchoring.errors import ValidationError


def table(values, row_ids=None, col_ids=None) -> MatchingTable:
    values = np.asarray(values, dtype=np.float64)
    n, m = values.shape if values.ndim == 2 else (0, 0)
    return MatchingTable(
        values,
        row_ids if row_ids is not None else [f"r{i}" for i in range(n)],
        col_ids if col_ids is not None else [f"c{j}" for j in range(m)],
    )


def random_table(rng: np.random.Generator, quantize: bool = False) -> MatchingTable:
    n = int(rng.integers(0, 8))
    m = int(rng.integers(0, 8))
    values = rng.random((n, m))
    if quantize and n and m:
        values = np.round(values * 4) / 4  # coarse grid forces ties
    return table(values)


def test_known_optimum():
    t = table([[0.9, 0.1], [0.2, 0.8]])
    assert solve(t).pairs == ((0, 0), (1, 1))
    t = table([[0.1, 0.9], [0.8, 0.2]])
    assert solve(t).pairs == ((0, 1), (1, 0))


def test_rectangular_tables():
    # more percepts than anchors: one row stays unassigned
    t = table([[0.9, 0.1], [0.8, 0.2], [0.1, 0.9]])
    assert solve(t).pairs == ((0, 0), (2, 1))
    # more anchors than percepts: one column stays unassigned
    t = table([[0.1, 0.5, 0.9]])
    assert solve(t).pairs == ((0, 2),)


def test_empty_tables():
    assert solve(table(np.zeros((0, 3)), [], ["a", "b", "c"])).pairs == ()
    assert solve(table(np.zeros((2, 0)), ["a", "b"], [])).pairs == ()
    assert solve_bruteforce(table(np.zeros((0, 0)), [], [])).pairs == ()


def test_tie_break_is_lexicographic():
    # all entries equal: identity-like assignment is the smallest pair list
    t = table(np.full((2, 2), 0.5))
    assert solve(t).pairs == ((0, 0), (1, 1))
    assert solve_bruteforce(t).pairs == ((0, 0), (1, 1))
    t = table(np.full((3, 1), 0.7))
    assert solve(t).pairs == ((0, 0),)
    assert solve_bruteforce(t).pairs == ((0, 0),)
    t = table(np.full((1, 3), 0.7))
    assert solve(t).pairs == ((0, 0),)
    assert solve_bruteforce(t).pairs == ((0, 0),)


def test_near_tie_within_tolerance_prefers_smaller_pairs():
    # difference far below the tie tolerance counts as a tie
    t = table([[0.5, 0.5 + 1e-12], [0.5, 0.5]])
    assert solve(t).pairs == ((0, 0), (1, 1))
    assert solve_bruteforce(t).pairs == ((0, 0), (1, 1))


def test_oracle_equivalence_random(rng):
    for case in range(400):
        t = random_table(rng, quantize=case % 3 == 0)
        got = solve(t)
        want = solve_bruteforce(t)
        assert got.pairs == want.pairs
        assert assignment_total(t, got) == pytest.approx(assignment_total(t, want), abs=1e-9)


def test_pair_structure(rng):
    for _ in range(100):
        t = random_table(rng)
        pairs = solve(t).pairs
        n, m = t.shape
        assert len(pairs) == min(n, m)
        rows = [r for r, _ in pairs]
        cols = [c for _, c in pairs]
        assert rows == sorted(rows)
        assert len(set(rows)) == len(rows)
        assert len(set(cols)) == len(cols)
        assert all(0 <= r < n and 0 <= c < m for r, c in pairs)


def test_permutation_equivariance(rng):
    # applies where the optimum is unique; noise values make ties measure-zero
    for _ in range(100):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        values = rng.random((n, m))
        base = solve(table(values)).pairs
        perm_rows = rng.permutation(n)
        permuted = values[perm_rows, :]
        got = solve(table(permuted)).pairs
        expected = sorted((int(np.where(perm_rows == r)[0][0]), c) for r, c in base)
        assert list(got) == expected


def test_constant_shift_preserves_optimal_pairings(rng):
    # on a square table, adding a constant shifts every assignment equally
    for _ in range(60):
        n = int(rng.integers(1, 5))
        values = rng.random((n, n)) * 0.5
        shift = float(rng.uniform(0, 0.4))
        before = solve_bruteforce(table(values)).pairs
        after = solve_bruteforce(table(values + shift)).pairs
        assert before == after
        assert solve(table(values + shift)).pairs == before


def test_bruteforce_size_limit():
    t = table(np.zeros((10, 10)))
    with pytest.raises(ValidationError, match="<= 9"):
        solve_bruteforce(t)


def test_table_validation():
    with pytest.raises(ValidationError, match="2-D"):
        MatchingTable(np.zeros(3), ["a"], ["b"])
    with pytest.raises(ValidationError, match="do not match"):
        MatchingTable(np.zeros((2, 2)), ["a"], ["b", "c"])
    with pytest.raises(ValidationError, match="unique"):
        MatchingTable(np.zeros((2, 2)), ["a", "a"], ["b", "c"])
    with pytest.raises(ValidationError, match="finite"):
        MatchingTable(np.array([[np.nan, 0.0]]), ["a"], ["b", "c"])
    with pytest.raises(ValidationError, match=r"\[0, 1\]"):
        MatchingTable(np.array([[1.5, 0.0]]), ["a"], ["b", "c"])


def test_assignment_total():
    t = table([[0.9, 0.1], [0.2, 0.8]])
    assert assignment_total(t, Assignment(((0, 0), (1, 1)))) == pytest.approx(1.7)

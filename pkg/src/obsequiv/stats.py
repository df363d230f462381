"""Chi-square tests on contingency tables of symbol counts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

SIGNIFICANCE = 0.01
MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class ChiSquare:
    statistic: float
    dof: int
    pvalue: float

    def rejects(self, significance: float = SIGNIFICANCE) -> bool:
        return self.pvalue < significance


def _drop_empty(table: np.ndarray) -> np.ndarray:
    table = table[table.sum(axis=1) > 0]
    return table[:, table.sum(axis=0) > 0]


def _merge_smallest(table: np.ndarray, axis: int) -> np.ndarray:
    # Fold the line with the smallest total into the next smallest one.
    totals = table.sum(axis=1 - axis)
    order = np.argsort(totals, kind="stable")
    a, b = order[0], order[1]
    t = table if axis == 0 else table.T
    merged = t.copy()
    merged[b] += merged[a]
    merged = np.delete(merged, a, axis=0)
    return merged if axis == 0 else merged.T


def pool_sparse(table: np.ndarray) -> np.ndarray:
    """Drop all-zero rows/columns, then merge small rows/columns until every expected count is >= 5."""
    table = _drop_empty(np.asarray(table, dtype=float))
    while table.size and min(table.shape) > 1:
        expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / table.sum()
        if expected.min() >= MIN_EXPECTED:
            break
        rows, cols = table.sum(axis=1), table.sum(axis=0)
        axis = 0 if rows.min() <= cols.min() else 1
        if table.shape[axis] < 2:
            axis = 1 - axis
        table = _merge_smallest(table, axis)
    return table


def homogeneity(table: np.ndarray) -> ChiSquare:
    """Pearson chi-square test that all rows share one distribution over columns.

    For a table of joint counts this is also the test of independence of
    the row and column variables.
    """
    t = pool_sparse(table)
    if t.size == 0 or min(t.shape) < 2:
        return ChiSquare(0.0, 0, 1.0)
    expected = np.outer(t.sum(axis=1), t.sum(axis=0)) / t.sum()
    stat = float(((t - expected) ** 2 / expected).sum())
    dof = (t.shape[0] - 1) * (t.shape[1] - 1)
    return ChiSquare(stat, dof, float(stats.chi2.sf(stat, dof)))


def combine(tests: list[ChiSquare]) -> ChiSquare:
    """Sum independent chi-square statistics and their degrees of freedom."""
    stat = sum(t.statistic for t in tests)
    dof = sum(t.dof for t in tests)
    if dof == 0:
        return ChiSquare(0.0, 0, 1.0)
    return ChiSquare(stat, dof, float(stats.chi2.sf(stat, dof)))

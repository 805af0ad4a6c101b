"""Exact Gauss-Jordan elimination over the field of expressions.

Pivots are chosen structurally (constants first, then the shortest entry) and
certified numerically: a pivot must be non-vanishing at every sample point.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
import symengine as se

from .symbolic import (
    DEFAULT_POLICY,
    ZERO,
    Expr,
    SamplePolicy,
    ZeroVerdict,
    is_exactly_zero,
    is_zero,
    normal,
    sample_values,
)


class SingularSystemError(ValueError):
    pass


class InconsistentSystemError(ValueError):
    def __init__(self, message: str, verdict: ZeroVerdict | None = None):
        super().__init__(message)
        self.verdict = verdict


def _tidy(e: Expr) -> Expr:
    if e.is_Number or e.is_Symbol:
        return e
    return normal(e)


def _certified(e: Expr, policy: SamplePolicy) -> bool:
    if e.is_Number:
        return e != 0
    if is_exactly_zero(e):
        return False
    _, vals = sample_values([e], None, policy)
    return bool(np.all(np.abs(vals) > policy.tol))


def _pivot_order(column: list[tuple[int, Expr]]):
    def key(item):
        _, e = item
        return (0 if e.is_Number else 1, len(str(e)))
    return sorted(column, key=key)


def solve(A: Sequence[Sequence[Expr]], B: Sequence[Sequence[Expr]],
          policy: SamplePolicy = DEFAULT_POLICY, require_unique: bool = True):
    """Solve A X = B exactly.

    ``A`` is m x n, ``B`` is m x r. Returns the n x r solution. Rows left
    without a pivot must reduce to zero-class right-hand sides, otherwise
    :class:`InconsistentSystemError` is raised with the offending verdict.
    Columns without a certified pivot raise :class:`SingularSystemError` when
    ``require_unique`` is set.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    r = len(B[0]) if m else 0
    M = [[se.sympify(x) for x in A[i]] + [se.sympify(x) for x in B[i]] for i in range(m)]
    pivots: list[tuple[int, int]] = []
    row = 0
    for col in range(n):
        candidates = [(i, M[i][col]) for i in range(row, m) if not is_exactly_zero(M[i][col])]
        chosen = None
        for i, e in _pivot_order(candidates):
            if _certified(e, policy):
                chosen = i
                break
        if chosen is None:
            if require_unique:
                raise SingularSystemError(f"no certified pivot in column {col}")
            continue
        M[row], M[chosen] = M[chosen], M[row]
        p = M[row][col]
        inv = 1 / p
        M[row] = [ZERO if j == col else _tidy(x * inv) for j, x in enumerate(M[row])]
        M[row][col] = se.Integer(1)
        for i in range(m):
            if i == row:
                continue
            f = M[i][col]
            if is_exactly_zero(f):
                M[i][col] = ZERO
                continue
            M[i] = [ZERO if j == col else _tidy(M[i][j] - f * M[row][j]) for j in range(n + r)]
        pivots.append((row, col))
        row += 1
        if row == m:
            break
    for i in range(row, m):
        for j in range(n, n + r):
            v = is_zero(M[i][j], policy)
            if not v.is_zero:
                raise InconsistentSystemError(f"inconsistent equation {i} (right-hand side {j - n})", v)
    X = [[ZERO] * r for _ in range(n)]
    for prow, pcol in pivots:
        for j in range(r):
            X[pcol][j] = M[prow][n + j]
    return X


def solve_vector(A, b: Sequence[Expr], policy: SamplePolicy = DEFAULT_POLICY) -> list[Expr]:
    X = solve(A, [[x] for x in b], policy)
    return [row[0] for row in X]


def inverse(A, policy: SamplePolicy = DEFAULT_POLICY):
    n = len(A)
    eye = [[se.Integer(1) if i == j else ZERO for j in range(n)] for i in range(n)]
    return solve(A, eye, policy)

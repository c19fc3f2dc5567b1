"""
Exact dense linear algebra over QuadScalar.

Matrices are lists of rows. Nothing here touches floating point.
"""
from __future__ import annotations

from typing import List, Sequence, Tuple

from dilation.models.scalarfield import ONE, ZERO, QuadScalar

Matrix = List[List[QuadScalar]]
Vector = List[QuadScalar]


def copy_matrix(m: Sequence[Sequence[QuadScalar]]) -> Matrix:
    return [list(row) for row in m]


def identity(n: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def subtract_identity(m: Sequence[Sequence[QuadScalar]]) -> Matrix:
    out = copy_matrix(m)
    for i in range(len(out)):
        out[i][i] = out[i][i] - ONE
    return out


def mat_vec(m: Sequence[Sequence[QuadScalar]], v: Sequence[QuadScalar]) -> Vector:
    return [sum((a * x for a, x in zip(row, v)), ZERO) for row in m]


def submatrix(m: Sequence[Sequence[QuadScalar]], rows: Sequence[int], cols: Sequence[int]) -> Matrix:
    return [[m[r][c] for c in cols] for r in rows]


def rref(m: Sequence[Sequence[QuadScalar]]) -> Tuple[Matrix, List[int]]:
    """
    Reduced row echelon form by fraction-free Gauss-Jordan elimination.

    Each step replaces row i by (p * row_i - a_ic * row_r) / p_prev, the
    Bareiss update applied above and below the pivot. Pivot rows are scaled
    to a leading 1 only at the end.

    Returns:
        (reduced matrix, pivot columns)
    """
    a = copy_matrix(m)
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    pivots: List[int] = []
    prev = ONE
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        pivot = next((i for i in range(r, n_rows) if a[i][c]), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        p = a[r][c]
        for i in range(n_rows):
            if i == r:
                continue
            f = a[i][c]
            a[i] = [(p * x - f * y) / prev for x, y in zip(a[i], a[r])]
        prev = p
        pivots.append(c)
        r += 1
    for row, c in enumerate(pivots):
        inv = a[row][c].inverse()
        a[row] = [x * inv for x in a[row]]
    return a, pivots


def null_space(m: Sequence[Sequence[QuadScalar]]) -> List[Vector]:
    """Exact basis of the right kernel, one vector per free column."""
    if not m:
        return []
    n_cols = len(m[0])
    reduced, pivots = rref(m)
    free = [c for c in range(n_cols) if c not in pivots]
    basis: List[Vector] = []
    for f in free:
        v = [ZERO] * n_cols
        v[f] = ONE
        for row, pc in enumerate(pivots):
            v[pc] = -reduced[row][f]
        basis.append(v)
    return basis


def determinant(m: Sequence[Sequence[QuadScalar]]) -> QuadScalar:
    """Fraction-free (Bareiss) determinant; every division is exact."""
    a = copy_matrix(m)
    n = len(a)
    if n == 0:
        return ONE
    sign = 1
    prev = ONE
    for k in range(n - 1):
        if not a[k][k]:
            swap = next((i for i in range(k + 1, n) if a[i][k]), None)
            if swap is None:
                return ZERO
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[k][k] * a[i][j] - a[i][k] * a[k][j]) / prev
        prev = a[k][k]
    return a[n - 1][n - 1] if sign > 0 else -a[n - 1][n - 1]


def is_zero_block(m: Sequence[Sequence[QuadScalar]], rows: Sequence[int], cols: Sequence[int]) -> bool:
    return all(not m[r][c] for r in rows for c in cols)

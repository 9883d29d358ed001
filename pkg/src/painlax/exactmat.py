"""Small exact matrix utilities used throughout the symbolic engine.

Two matrix flavours appear:

* rational matrices (``Fraction`` entries) for Gram systems, basis
  coordinates and rank checks;
* symbolic matrices (``Poly`` / ``RatExpr`` entries) for Lax matrices,
  representation elements and tensors.

Matrices are plain lists of lists; these helpers keep everything exact.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, List, Optional, Sequence

from .poly import Poly, RatExpr, VarTable, as_ratexpr

Matrix = List[List]


def shape(m: Matrix):
    return len(m), len(m[0]) if m else 0


def mat_map(m: Matrix, fn: Callable) -> Matrix:
    return [[fn(x) for x in row] for row in m]


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_neg(a: Matrix) -> Matrix:
    return [[-x for x in row] for row in a]


def mat_scale(a: Matrix, s) -> Matrix:
    return [[x * s for x in row] for row in a]


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    rows, inner = shape(a)
    _, cols = shape(b)
    out = []
    for i in range(rows):
        row = []
        for j in range(cols):
            acc = a[i][0] * b[0][j]
            for k in range(1, inner):
                acc = acc + a[i][k] * b[k][j]
            row.append(acc)
        out.append(row)
    return out


def commutator(a: Matrix, b: Matrix) -> Matrix:
    return mat_sub(mat_mul(a, b), mat_mul(b, a))


def trace(a: Matrix):
    acc = a[0][0]
    for i in range(1, len(a)):
        acc = acc + a[i][i]
    return acc


def zeros(table: VarTable, n: int, m: Optional[int] = None) -> Matrix:
    m = n if m is None else m
    return [[table.zero() for _ in range(m)] for _ in range(n)]


def mat_is_zero(a: Matrix) -> bool:
    return all(x.is_zero() if hasattr(x, "is_zero") else x == 0
               for row in a for x in row)


def mat_eq(a: Matrix, b: Matrix) -> bool:
    return mat_is_zero(mat_sub(a, b))


def det(a: Matrix):
    """Determinant by cofactor expansion (intended for n <= 5)."""
    n = len(a)
    if n == 1:
        return a[0][0]
    if n == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    acc = None
    for j in range(n):
        entry = a[0][j]
        if hasattr(entry, "is_zero") and entry.is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in a[1:]]
        term = entry * det(minor)
        if j % 2:
            term = -term
        acc = term if acc is None else acc + term
    if acc is None:
        return a[0][0] - a[0][0]  # typed zero
    return acc


# -- rational (Fraction) linear algebra ----------------------------------------------


def frac_solve(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]
               ) -> List[List[Fraction]]:
    """Solve A X = B exactly for square nonsingular rational A."""
    n = len(a)
    aug = [[Fraction(x) for x in row_a] + [Fraction(x) for x in row_b]
           for row_a, row_b in zip(a, b)]
    width = len(aug[0])
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular rational system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [x - factor * y for x, y in zip(aug[r], aug[col])]
    return [row[n:width] for row in aug]


def frac_inverse(a: Sequence[Sequence[Fraction]]) -> List[List[Fraction]]:
    n = len(a)
    eye = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    return frac_solve(a, eye)


def frac_rank(a: Sequence[Sequence[Fraction]]) -> int:
    """Exact rank by Gaussian elimination over the rationals."""
    m = [list(map(Fraction, row)) for row in a]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    rank = 0
    for col in range(cols):
        pivot = next((r for r in range(rank, rows) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        inv = Fraction(1) / m[rank][col]
        m[rank] = [x * inv for x in m[rank]]
        for r in range(rows):
            if r != rank and m[r][col]:
                factor = m[r][col]
                m[r] = [x - factor * y for x, y in zip(m[r], m[rank])]
        rank += 1
        if rank == rows:
            break
    return rank


class DecompositionSingular(ValueError):
    """An exact symbolic linear solve met a non-invertible pivot."""


def ratexpr_solve(a: Matrix, b: List, table: VarTable) -> List[RatExpr]:
    """Solve a small square system with RatExpr entries.

    Pivots must be invertible in the RatExpr class (single terms in unit
    variables); preference is given to such pivots at each step.  Raises
    ``DecompositionSingular`` when no usable pivot exists.
    """
    n = len(a)
    aug = [[as_ratexpr(table, x) for x in row] + [as_ratexpr(table, rhs)]
           for row, rhs in zip(a, b)]
    perm = list(range(n))
    for col in range(n):
        pivot = None
        for r in range(col, n):
            entry = aug[r][col]
            if entry.is_zero():
                continue
            try:
                entry.num.as_unit_term()
            except Exception:
                continue
            pivot = r
            break
        if pivot is None:
            raise DecompositionSingular(f"no invertible pivot in column {col}")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = as_ratexpr(table, 1) / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and not aug[r][col].is_zero():
                factor = aug[r][col]
                aug[r] = [x - factor * y for x, y in zip(aug[r], aug[col])]
    del perm
    return [aug[i][n] for i in range(n)]

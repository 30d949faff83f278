"""Exact rational linear algebra.

Vectors are tuples of ``Fraction``. Heavy lifting (rank, elimination, null
spaces) goes through ``sympy.Matrix`` over ``sympy.Rational``; the helpers
here only convert at the boundary so callers never see sympy objects.
"""

from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Iterable, List, Optional, Sequence, Tuple

import sympy as sp

Vector = Tuple[Fraction, ...]


def _to_sympy(value: Fraction) -> sp.Rational:
    return sp.Rational(value.numerator, value.denominator)


def _from_sympy(value) -> Fraction:
    r = sp.Rational(value)
    return Fraction(int(r.p), int(r.q))


def to_matrix(rows: Sequence[Sequence[Fraction]], ncols: Optional[int] = None) -> sp.Matrix:
    """Build a sympy matrix from rows of fractions."""
    if not rows:
        return sp.zeros(0, ncols or 0)
    return sp.Matrix([[_to_sympy(Fraction(x)) for x in row] for row in rows])


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows or not rows[0]:
        return 0
    return to_matrix(rows).rank()


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> List[Vector]:
    """Basis of {x : rows · x = 0}."""
    if not rows:
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    basis = to_matrix(rows).nullspace()
    return [tuple(_from_sympy(x) for x in col) for col in basis]


def row_basis(rows: Sequence[Sequence[Fraction]]) -> List[Vector]:
    """Basis of the row space of ``rows``."""
    if not rows:
        return []
    return [tuple(_from_sympy(x) for x in row) for row in to_matrix(rows).rowspace()]


def solve_unique(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> Optional[Vector]:
    """Solve ``a x = b`` exactly; ``None`` if inconsistent or underdetermined."""
    if not a:
        return None
    m = to_matrix(a)
    rhs = sp.Matrix([_to_sympy(Fraction(x)) for x in b])
    try:
        solution, params = m.gauss_jordan_solve(rhs)
    except ValueError:
        return None
    if params.shape[0] != 0:
        return None
    return tuple(_from_sympy(x) for x in solution)


def left_inverse(columns: Sequence[Sequence[Fraction]]) -> Optional[Tuple[Vector, ...]]:
    """Left inverse (k × m) of the m × k matrix with the given columns.

    Returns ``None`` when the columns are linearly dependent.
    """
    m = to_matrix(columns).T
    gram = m.T * m
    if gram.det() == 0:
        return None
    inv = gram.inv() * m.T
    return tuple(
        tuple(_from_sympy(inv[i, j]) for j in range(inv.shape[1]))
        for i in range(inv.shape[0])
    )


def mat_vec(matrix: Sequence[Sequence[Fraction]], vector: Sequence[Fraction]) -> Vector:
    return tuple(sum((x * y for x, y in zip(row, vector)), Fraction(0)) for row in matrix)


def vsub(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector:
    return tuple(x - y for x, y in zip(u, v))


def vadd(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector:
    return tuple(x + y for x, y in zip(u, v))


def vscale(c: Fraction, v: Sequence[Fraction]) -> Vector:
    return tuple(c * x for x in v)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(u, v)), Fraction(0))


def combine(weights: Iterable[Fraction], points: Sequence[Sequence[Fraction]]) -> Vector:
    """Weighted sum ``Σ w_i p_i``."""
    weights = list(weights)
    dim = len(points[0])
    return tuple(
        sum((w * p[j] for w, p in zip(weights, points)), Fraction(0)) for j in range(dim)
    )


def centroid(points: Sequence[Sequence[Fraction]]) -> Vector:
    n = len(points)
    return combine([Fraction(1, n)] * n, points)


def primitive(v: Sequence[Fraction]) -> Vector:
    """Scale a nonzero rational vector to coprime integers (sign kept)."""
    denominators = [x.denominator for x in v if x]
    if not denominators:
        return tuple(v)
    lcm = reduce(lambda a, b: a * b // gcd(a, b), denominators, 1)
    ints = [int(x * lcm) for x in v]
    g = reduce(gcd, (abs(i) for i in ints if i), 0) or 1
    return tuple(Fraction(i // g) for i in ints)


def affine_rank(points: Sequence[Sequence[Fraction]]) -> int:
    """Affine dimension of the hull of ``points`` (-1 for no points)."""
    if not points:
        return -1
    base = points[0]
    return rank([vsub(p, base) for p in points[1:]])

"""Exact integer/rational arithmetic and the small linear algebra used by
candidate generation.

Python's ``int`` is already arbitrary precision and ``fractions.Fraction`` is
always kept in lowest terms with a positive denominator, so both are used
directly as the ``Int`` and ``Rat`` types.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt, lcm
from typing import Iterable, Optional, Sequence, Tuple

Rat = Fraction
QMatrix = Tuple[Tuple[Fraction, ...], ...]


class DimensionError(ValueError):
    pass


def qmatrix(rows: Iterable[Iterable]) -> QMatrix:
    """Normalize a nested iterable into an immutable rectangular matrix of Fractions."""
    out = tuple(tuple(Fraction(v) for v in row) for row in rows)
    if out and len({len(r) for r in out}) != 1:
        raise DimensionError("ragged matrix")
    return out


def shape(A: Sequence[Sequence]) -> Tuple[int, int]:
    return len(A), (len(A[0]) if len(A) else 0)


def frac_norm(r) -> int:
    """|num| + |den| of a rational; entrywise max for vectors and matrices."""
    if isinstance(r, (list, tuple)):
        if not r:
            return 1
        return max(frac_norm(v) for v in r)
    q = Fraction(r)
    return abs(q.numerator) + q.denominator


def _row_lcm(row) -> int:
    m = 1
    for v in row:
        m = lcm(m, Fraction(v).denominator)
    return m


def _bareiss(M) -> int:
    # fraction-free elimination on an integer matrix (list of lists, mutated)
    n = len(M)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
            M[i][k] = 0
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def det(A) -> Fraction:
    """Exact determinant. Rational rows are scaled to integers first, then Bareiss."""
    n, m = shape(A)
    if n != m:
        raise DimensionError(f"det of non-square {n}x{m} matrix")
    if n == 0:
        return Fraction(1)
    scale = 1
    M = []
    for row in A:
        s = _row_lcm(row)
        scale *= s
        M.append([int(Fraction(v) * s) for v in row])
    return Fraction(_bareiss(M), scale)


def int_det(A) -> int:
    n, m = shape(A)
    if n != m:
        raise DimensionError(f"det of non-square {n}x{m} matrix")
    if n == 0:
        return 1
    return _bareiss([[int(v) for v in row] for row in A])


def _ceil_sqrt(s: int) -> int:
    c = isqrt(s)
    return c if c * c == s else c + 1


def hadamard_bound(A) -> int:
    """Upper bound on |det S| for every square submatrix S of an integer matrix.

    Product over rows of ceil(row 2-norm), with empty/zero rows counted as 1 so
    that restricting to a subset of rows can only shrink the product.
    """
    bound = 1
    for row in A:
        s = sum(int(v) * int(v) for v in row)
        bound *= max(1, _ceil_sqrt(s))
    return bound


def cramer_solve(A, b) -> Optional[Tuple[Fraction, ...]]:
    """Solve A x = b exactly; ``None`` when A is singular."""
    n, m = shape(A)
    if n != m:
        raise DimensionError("cramer_solve needs a square matrix")
    if len(b) != n:
        raise DimensionError("right-hand side length mismatch")
    d = det(A)
    if d == 0:
        return None
    sol = []
    for j in range(n):
        Aj = [list(row) for row in A]
        for i in range(n):
            Aj[i][j] = b[i]
        sol.append(det(Aj) / d)
    return tuple(sol)


def inverse(A) -> Optional[QMatrix]:
    """Exact inverse via Gauss-Jordan; ``None`` when singular."""
    n, m = shape(A)
    if n != m:
        raise DimensionError("inverse of non-square matrix")
    M = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(A)]
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c] != 0), None)
        if p is None:
            return None
        M[c], M[p] = M[p], M[c]
        piv = M[c][c]
        M[c] = [v / piv for v in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return tuple(tuple(row[n:]) for row in M)


def matmul(A, B) -> QMatrix:
    n, k = shape(A)
    k2, m = shape(B)
    if k != k2:
        raise DimensionError("matmul shape mismatch")
    return tuple(tuple(sum((Fraction(A[i][t]) * B[t][j] for t in range(k)), Fraction(0))
                       for j in range(m)) for i in range(n))


def matvec(A, v) -> Tuple[Fraction, ...]:
    return tuple(sum((Fraction(a) * x for a, x in zip(row, v)), Fraction(0)) for row in A)


def rank(A) -> int:
    M = [[Fraction(v) for v in row] for row in A]
    r = 0
    cols = len(M[0]) if M else 0
    for c in range(cols):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        for i in range(r + 1, len(M)):
            if M[i][c]:
                f = M[i][c] / M[r][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        r += 1
    return r


def column_echelon(A) -> Tuple[list, list, int]:
    """Integer column echelon form with a unimodular transform.

    Returns (H, V, r) with A V = H, V unimodular, and H having its nonzero
    columns 0..r-1 in echelon shape (column j has its first nonzero entry at a
    row strictly below that of column j-1). Columns r.. of V span the integer
    kernel of A.
    """
    rows, cols = shape(A)
    H = [[int(v) for v in row] for row in A]
    V = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def colop(dst, src, k):
        # column dst += k * column src
        for row in H:
            row[dst] += k * row[src]
        for row in V:
            row[dst] += k * row[src]

    def swap(a, b):
        for row in H:
            row[a], row[b] = row[b], row[a]
        for row in V:
            row[a], row[b] = row[b], row[a]

    r = 0
    for i in range(rows):
        if r == cols:
            break
        # euclid on row i across columns r..cols-1
        while True:
            nz = [j for j in range(r, cols) if H[i][j] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda j: abs(H[i][j]))
            if piv != r:
                swap(piv, r)
            done = True
            for j in range(r + 1, cols):
                if H[i][j]:
                    q = H[i][j] // H[i][r]
                    colop(j, r, -q)
                    if H[i][j]:
                        done = False
            if done:
                break
        if any(H[i][j] for j in range(r, cols)):
            if H[i][r] < 0:
                for row in H:
                    row[r] = -row[r]
                for row in V:
                    row[r] = -row[r]
            r += 1
    return H, V, r


def lcm_all(values: Iterable[int]) -> int:
    m = 1
    for v in values:
        m = lcm(m, int(v))
    return m


def gcd_all(values: Iterable[int]) -> int:
    g = 0
    for v in values:
        g = gcd(g, int(v))
    return g


@dataclass(frozen=True)
class AffineMapQ:
    """x -> D x + d over the rationals."""
    D: QMatrix
    d: Tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.D) != len(self.d):
            raise DimensionError("affine map: D rows != len(d)")

    @property
    def out_dim(self) -> int:
        return len(self.d)

    @property
    def in_dim(self) -> int:
        return len(self.D[0]) if self.D else 0

    def __call__(self, x) -> Tuple[Fraction, ...]:
        return tuple(sum((a * v for a, v in zip(row, x)), Fraction(0)) + c
                     for row, c in zip(self.D, self.d))

    def denominators(self):
        for row in self.D:
            for v in row:
                yield v.denominator
        for v in self.d:
            yield v.denominator

    def common_denominator(self) -> int:
        return lcm_all(self.denominators())

    def frac_norm(self) -> int:
        return max(frac_norm(list(self.D)) if self.D else 1, frac_norm(list(self.d)))

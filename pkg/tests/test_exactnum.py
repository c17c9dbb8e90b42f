import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from presynth.exactnum import (AffineMapQ, DimensionError, column_echelon, cramer_solve, det,
                               frac_norm, hadamard_bound, int_det, inverse, matvec, rank)


@pytest.mark.parametrize("r,expected", [(Fraction(3, 2), 5), (0, 1), (-7, 8), (Fraction(-6, 4), 5)])
def test_frac_norm(r, expected):
    assert frac_norm(r) == expected


def test_frac_norm_matrix_is_entrywise_max():
    assert frac_norm([[Fraction(1, 3), 2], [0, Fraction(-5, 2)]]) == 7


@given(st.fractions())
def test_frac_norm_at_least_one(q):
    assert frac_norm(q) >= 1


@given(st.integers(-10 ** 6, 10 ** 6))
def test_frac_norm_integer(k):
    assert frac_norm(k) == abs(k) + 1


@pytest.mark.parametrize("A,expected", [
    ([[1, 0], [0, 1]], 1),
    ([[2, 1], [1, 1]], 1),
    ([[1, 2], [2, 4]], 0),
    ([[0, 1], [1, 0]], -1),
    ([[Fraction(1, 2), 0], [0, 4]], 2),
])
def test_det(A, expected):
    assert det(A) == expected


def test_det_non_square():
    with pytest.raises(DimensionError):
        det([[1, 2, 3], [4, 5, 6]])


def test_cramer_examples():
    assert cramer_solve([[2, 0], [0, 2]], [4, 6]) == (2, 3)
    assert cramer_solve([[1, 1], [1, -1]], [3, 1]) == (2, 1)
    assert cramer_solve([[1, 2], [2, 4]], [1, 1]) is None


def test_cramer_dimension_mismatch():
    with pytest.raises(DimensionError):
        cramer_solve([[1, 0], [0, 1]], [1])


small = st.integers(-3, 3)


@given(st.integers(1, 3).flatmap(
    lambda n: st.tuples(st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n),
                        st.lists(small, min_size=n, max_size=n))))
def test_cramer_solution_is_exact(case):
    A, b = case
    x = cramer_solve(A, b)
    if det(A) == 0:
        assert x is None
    else:
        assert matvec(A, x) == tuple(Fraction(v) for v in b)


def _all_subdets(A):
    n, m = len(A), len(A[0])
    for k in range(1, min(n, m) + 1):
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.combinations(range(m), k):
                yield int_det([[A[i][j] for j in cols] for i in rows])


@pytest.mark.parametrize("A,lower", [([[1, 0], [0, 1]], 1), ([[2, 1], [1, 1]], 2), ([[3]], 3)])
def test_hadamard_examples(A, lower):
    assert hadamard_bound(A) >= lower
    assert hadamard_bound(A) >= max(abs(d) for d in _all_subdets(A))


@given(st.integers(1, 4).flatmap(lambda n: st.integers(1, 4).flatmap(
    lambda m: st.lists(st.lists(small, min_size=m, max_size=m), min_size=n, max_size=n))))
def test_hadamard_dominates_every_subdeterminant(A):
    assert hadamard_bound(A) >= max(abs(d) for d in _all_subdets(A))


def test_inverse_roundtrip():
    A = [[2, 1], [1, 1]]
    inv = inverse(A)
    assert [[sum(A[i][k] * inv[k][j] for k in range(2)) for j in range(2)] for i in range(2)] == [[1, 0], [0, 1]]
    assert inverse([[1, 2], [2, 4]]) is None


def test_rank():
    assert rank([[1, 2], [2, 4]]) == 1
    assert rank([[1, 0], [0, 1], [1, 1]]) == 2


def test_column_echelon_reconstructs():
    A = [[2, 4], [1, 3]]
    H, V, r = column_echelon(A)
    assert r == 2
    # A V = H with V unimodular
    AV = [[sum(A[i][k] * V[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
    assert AV == [list(row) for row in H]
    assert abs(int_det(V)) == 1


def test_affine_map():
    A = AffineMapQ(((Fraction(1, 2), Fraction(0)),), (Fraction(1),))
    assert A((4, 9)) == (Fraction(3),)
    assert A.common_denominator() == 2
    with pytest.raises(DimensionError):
        AffineMapQ(((Fraction(1),),), ())

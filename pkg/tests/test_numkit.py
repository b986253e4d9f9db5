from fractions import Fraction
from itertools import combinations
from random import Random

import pytest

from aldual.errors import (
    DimMismatchError,
    NotSquareError,
    NotSymmetricError,
    RationalParseError,
)
from aldual.numkit import (
    INCONSISTENT,
    RatMat,
    RatVec,
    UNDERDETERMINED,
    UNIQUE,
    ceil_sqrt,
    format_rat,
    ldl_psd_check,
    parse_rat,
    quad_form,
    solve_linear,
    sqrt_upper,
)


def rand_rat(rng, mag=5):
    den = rng.choice((1, 2, 3, 4))
    return Fraction(rng.randint(-mag * den, mag * den), den)


# ---------------------------------------------------------------- rationals

def test_parse_rat_basic():
    assert parse_rat("3/4") == Fraction(3, 4)
    assert parse_rat("-2") == Fraction(-2)
    assert parse_rat("-6/4") == Fraction(-3, 2)
    assert parse_rat("0") == 0


@pytest.mark.parametrize("bad", ["1/0", "1/-2", "+3", "1.5", "a", "", "3/4/5", "1 /2"])
def test_parse_rat_rejects(bad):
    with pytest.raises(RationalParseError):
        parse_rat(bad)


def test_format_round_trip():
    rng = Random(0)
    for _ in range(200):
        q = rand_rat(rng, 1000)
        assert parse_rat(format_rat(q)) == q
    assert format_rat(Fraction(5, 1)) == "5"
    assert format_rat(Fraction(-7, 3)) == "-7/3"


def test_field_exactness():
    rng = Random(1)
    for _ in range(1000):
        a, b = rand_rat(rng), rand_rat(rng)
        assert (a + b) - b == a
        if b != 0:
            assert (a * b) / b == a


def test_ceil_sqrt():
    assert ceil_sqrt(0) == 0
    assert ceil_sqrt(1) == 1
    assert ceil_sqrt(2) == 2
    assert ceil_sqrt(4) == 2
    assert ceil_sqrt(Fraction(1, 4)) == 1
    assert ceil_sqrt(Fraction(17)) == 5
    rng = Random(2)
    for _ in range(300):
        q = abs(rand_rat(rng, 50))
        k = ceil_sqrt(q)
        assert k * k >= q
        assert k == 0 or (k - 1) * (k - 1) < q


def test_sqrt_upper_bounds_and_monotone():
    rng = Random(3)
    vals = sorted(abs(rand_rat(rng, 20)) for _ in range(100))
    prev = None
    for q in vals:
        u = sqrt_upper(q)
        assert u * u >= q
        if prev is not None:
            assert u >= prev
        prev = u
    # shrinks with the value along a dyadic schedule
    diams = [sqrt_upper(Fraction(1, 2**k)) for k in range(21)]
    assert all(a >= b for a, b in zip(diams, diams[1:]))
    assert diams[20] <= Fraction(1, 2**9)


# ------------------------------------------------------------ vec / matrix

def test_vec_ops():
    v = RatVec([1, 2, 3])
    w = RatVec(["1/2", 0, -1])
    assert (v + w)[0] == Fraction(3, 2)
    assert (v - w)[2] == 4
    assert v.dot(w) == Fraction(1, 2) - 3
    assert (-v)[1] == -2
    assert v.scale(Fraction(1, 3)) == RatVec([Fraction(1, 3), Fraction(2, 3), 1])
    with pytest.raises(DimMismatchError):
        v.dot(RatVec([1]))


def test_mat_ops():
    M = RatMat([[1, 2], [3, 4], [5, 6]])
    assert M.rows == 3 and M.cols == 2
    assert M.transpose().row(0) == RatVec([1, 3, 5])
    assert M.matvec(RatVec([1, -1])) == RatVec([-1, -1, -1])
    assert M.tmatvec(RatVec([1, 0, 1])) == RatVec([6, 8])
    P = M.transpose().matmul(M)
    assert P.is_symmetric()
    assert P[0, 1] == 1 * 2 + 3 * 4 + 5 * 6
    with pytest.raises(DimMismatchError):
        M.matvec(RatVec([1, 2, 3]))
    E = RatMat([], cols=3)
    assert E.rows == 0 and E.cols == 3
    assert E.tmatvec(RatVec([])) == RatVec([0, 0, 0])


# ---------------------------------------------------------------- PSD test

def _det(M: RatMat) -> Fraction:
    n = M.rows
    if n == 0:
        return Fraction(1)
    rows = M.row_list()
    det = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if rows[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            rows[c], rows[p] = rows[p], rows[c]
            det = -det
        det *= rows[c][c]
        for i in range(c + 1, n):
            f = rows[i][c] / rows[c][c]
            for j in range(c, n):
                rows[i][j] -= f * rows[c][j]
    return det


def _psd_by_minors(M: RatMat) -> bool:
    # PSD iff every principal minor is nonnegative
    n = M.rows
    idx = range(n)
    for k in range(1, n + 1):
        for sub in combinations(idx, k):
            if _det(M.submatrix(sub, sub)) < 0:
                return False
    return True


def test_psd_identity_and_zero():
    assert ldl_psd_check(RatMat.identity(2)).is_psd
    assert ldl_psd_check(RatMat.zeros(2, 2)).is_psd


def test_psd_indefinite_witness():
    rep = ldl_psd_check(RatMat([[1, 2], [2, 1]]))
    assert not rep.is_psd
    assert quad_form(RatMat([[1, 2], [2, 1]]), rep.witness) < 0


def test_psd_input_errors():
    with pytest.raises(NotSquareError):
        ldl_psd_check(RatMat([[1, 2]]))
    with pytest.raises(NotSymmetricError):
        ldl_psd_check(RatMat([[1, 2], [0, 1]]))


def test_psd_gram_matrices_with_random_quadratic_forms():
    rng = Random(4)
    for _ in range(20):
        n = rng.randint(1, 4)
        L = RatMat([[rand_rat(rng, 3) for _ in range(n)]
                    for _ in range(rng.randint(1, n))], cols=n)
        M = L.transpose().matmul(L)
        rep = ldl_psd_check(M)
        assert rep.is_psd
        for _ in range(50):
            x = RatVec([rand_rat(rng, 5) for _ in range(n)])
            assert quad_form(M, x) >= 0


def test_psd_matches_principal_minor_oracle():
    rng = Random(5)
    agree = 0
    for _ in range(120):
        n = rng.randint(1, 4)
        sym = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                sym[i][j] = sym[j][i] = rand_rat(rng, 2)
        M = RatMat(sym)
        rep = ldl_psd_check(M)
        assert rep.is_psd == _psd_by_minors(M)
        if not rep.is_psd:
            assert quad_form(M, rep.witness) < 0
        agree += 1
    assert agree == 120


def test_psd_semidefinite_boundary():
    # rank-1 PSD with a zero leading diagonal entry
    M = RatMat([[0, 0, 0], [0, 1, 2], [0, 2, 4]])
    assert ldl_psd_check(M).is_psd
    # zero diagonal with nonzero off-diagonal is not PSD
    M2 = RatMat([[0, 1], [1, 0]])
    rep = ldl_psd_check(M2)
    assert not rep.is_psd and quad_form(M2, rep.witness) < 0


# ------------------------------------------------------------ linear solve

def test_solve_identity():
    rep = solve_linear(RatMat.identity(2), RatVec([3, 5]))
    assert rep.status == UNIQUE
    assert rep.x == RatVec([3, 5])


def test_solve_scalar():
    rep = solve_linear(RatMat([[2]]), RatVec([1]))
    assert rep.x == RatVec([Fraction(1, 2)])


def test_solve_inconsistent():
    rep = solve_linear(RatMat([[1, 1], [2, 2]]), RatVec([1, 3]))
    assert rep.status == INCONSISTENT
    assert rep.rank == 1


def test_solve_dim_mismatch():
    with pytest.raises(DimMismatchError):
        solve_linear(RatMat([[1, 1]]), RatVec([1, 2]))


def test_solve_random_nonsingular():
    rng = Random(6)
    done = 0
    while done < 25:
        n = rng.randint(1, 5)
        M = RatMat([[rand_rat(rng, 4) for _ in range(n)] for _ in range(n)])
        if _det(M) == 0:
            continue
        v = RatVec([rand_rat(rng, 4) for _ in range(n)])
        rep = solve_linear(M, v)
        assert rep.status == UNIQUE and rep.rank == n
        assert M.matvec(rep.x) == v
        done += 1


def test_solve_singular_consistent_parametrization():
    rng = Random(7)
    for _ in range(25):
        rows, cols = rng.randint(1, 4), rng.randint(1, 5)
        M = RatMat([[rand_rat(rng, 3) for _ in range(cols)] for _ in range(rows)])
        x_true = RatVec([rand_rat(rng, 3) for _ in range(cols)])
        v = M.matvec(x_true)  # consistent by construction
        rep = solve_linear(M, v)
        assert rep.status in (UNIQUE, UNDERDETERMINED)
        assert M.matvec(rep.x) == v
        for z in rep.nullspace:
            assert M.matvec(z) == RatVec([0] * rows)
            assert M.matvec(rep.x + z) == v
        assert rep.rank + len(rep.nullspace) == cols

"""Exact rational scalars, vectors, matrices and elimination kernels.

All numeric state in the package is built from :class:`fractions.Fraction`,
which already stores values in lowest terms with a positive denominator.
Vectors and matrices are immutable; every operation is a pure function, so
values are safe to share across threads.

Serialization convention: a rational renders as ``"p/q"`` (or ``"p"`` when
the denominator is 1), base 10, with an optional leading minus on the
numerator only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Iterable, Sequence

from .errors import (
    DimMismatchError,
    InternalInvariantError,
    NotSquareError,
    NotSymmetricError,
    RationalParseError,
)

Rat = Fraction

_ZERO = Fraction(0)
_ONE = Fraction(1)

_RAT_RE = re.compile(r"^-?\d+(?:/\d+)?$")


def rat(value) -> Fraction:
    """Coerce ints, Fractions and ``p/q`` strings to an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rat(value)
    raise RationalParseError(f"cannot interpret {value!r} as a rational")


def parse_rat(text: str) -> Fraction:
    """Parse the strict ``p/q`` wire format (minus sign on p only, q > 0)."""
    if not isinstance(text, str) or not _RAT_RE.match(text):
        raise RationalParseError(f"malformed rational {text!r}")
    if "/" in text:
        p, q = text.split("/")
        if int(q) == 0:
            raise RationalParseError(f"zero denominator in {text!r}")
        return Fraction(int(p), int(q))
    return Fraction(int(text))


def format_rat(value: Fraction) -> str:
    """Render a rational in the ``p/q`` wire format."""
    return str(Fraction(value))


def ceil_rat(value: Fraction) -> int:
    """Smallest integer >= value."""
    value = Fraction(value)
    return -((-value.numerator) // value.denominator)


def floor_rat(value: Fraction) -> int:
    """Largest integer <= value."""
    value = Fraction(value)
    return value.numerator // value.denominator


def ceil_sqrt(value) -> int:
    """Smallest nonnegative integer k with k*k >= value (value >= 0)."""
    value = Fraction(value)
    if value < 0:
        raise ValueError("ceil_sqrt of a negative value")
    k = isqrt(floor_rat(value))
    while k * k < value:
        k += 1
    return k


_SQRT_GRID_BITS = 20


def sqrt_upper(value, bits: int = _SQRT_GRID_BITS) -> Fraction:
    """Smallest multiple of 2**-bits whose square is >= value.

    A monotone rational upper bound on sqrt(value); exact at dyadic squares.
    """
    value = Fraction(value)
    if value < 0:
        raise ValueError("sqrt_upper of a negative value")
    scale = 1 << bits
    t = ceil_sqrt(value * scale * scale)
    return Fraction(t, scale)


class RatVec(Sequence):
    """Immutable vector of exact rationals."""

    __slots__ = ("_e",)

    def __init__(self, entries: Iterable):
        object.__setattr__(self, "_e", tuple(rat(e) for e in entries))

    @staticmethod
    def zeros(dim: int) -> "RatVec":
        return RatVec([_ZERO] * dim)

    @staticmethod
    def unit(dim: int, i: int) -> "RatVec":
        return RatVec([_ONE if j == i else _ZERO for j in range(dim)])

    @property
    def dim(self) -> int:
        return len(self._e)

    def __len__(self) -> int:
        return len(self._e)

    def __iter__(self):
        return iter(self._e)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return RatVec(self._e[i])
        return self._e[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, RatVec) and self._e == other._e

    def __hash__(self) -> int:
        return hash(self._e)

    def __add__(self, other: "RatVec") -> "RatVec":
        self._check_dim(other)
        return RatVec(a + b for a, b in zip(self._e, other._e))

    def __sub__(self, other: "RatVec") -> "RatVec":
        self._check_dim(other)
        return RatVec(a - b for a, b in zip(self._e, other._e))

    def __neg__(self) -> "RatVec":
        return RatVec(-a for a in self._e)

    def scale(self, k) -> "RatVec":
        k = rat(k)
        return RatVec(k * a for a in self._e)

    def dot(self, other: "RatVec") -> Fraction:
        self._check_dim(other)
        return sum((a * b for a, b in zip(self._e, other._e)), _ZERO)

    def concat(self, other: "RatVec") -> "RatVec":
        return RatVec(self._e + other._e)

    def is_zero(self) -> bool:
        return all(a == 0 for a in self._e)

    def _check_dim(self, other: "RatVec") -> None:
        if len(self._e) != len(other._e):
            raise DimMismatchError(
                f"vector dims differ: {len(self._e)} vs {len(other._e)}"
            )

    def __repr__(self) -> str:
        return "RatVec([%s])" % ", ".join(format_rat(a) for a in self._e)


class RatMat:
    """Immutable row-major matrix of exact rationals."""

    __slots__ = ("_rows", "rows", "cols")

    def __init__(self, rows: Iterable[Iterable], cols: int | None = None):
        data = tuple(tuple(rat(e) for e in row) for row in rows)
        if data:
            width = len(data[0])
            if any(len(r) != width for r in data):
                raise DimMismatchError("ragged rows in matrix")
        else:
            if cols is None:
                cols = 0
            width = cols
        if cols is not None and cols != width:
            raise DimMismatchError(f"expected {cols} columns, got {width}")
        object.__setattr__(self, "_rows", data)
        object.__setattr__(self, "rows", len(data))
        object.__setattr__(self, "cols", width)

    def __setattr__(self, name, value):
        raise AttributeError("RatMat is immutable")

    @staticmethod
    def zeros(rows: int, cols: int) -> "RatMat":
        return RatMat([[_ZERO] * cols for _ in range(rows)], cols=cols)

    @staticmethod
    def identity(n: int) -> "RatMat":
        return RatMat(
            [[_ONE if i == j else _ZERO for j in range(n)] for i in range(n)], cols=n
        )

    @staticmethod
    def from_rows(rows: Iterable[Iterable], cols: int | None = None) -> "RatMat":
        return RatMat(rows, cols=cols)

    @staticmethod
    def vstack(parts: Sequence["RatMat"], cols: int | None = None) -> "RatMat":
        widths = {p.cols for p in parts if p.rows > 0}
        if len(widths) > 1:
            raise DimMismatchError("vstack with differing column counts")
        if cols is None:
            cols = widths.pop() if widths else 0
        rows = []
        for p in parts:
            rows.extend(p._rows)
        return RatMat(rows, cols=cols)

    @staticmethod
    def hstack(parts: Sequence["RatMat"]) -> "RatMat":
        heights = {p.rows for p in parts}
        if len(heights) > 1:
            raise DimMismatchError("hstack with differing row counts")
        n = heights.pop() if heights else 0
        rows = []
        for i in range(n):
            row: list = []
            for p in parts:
                row.extend(p._rows[i])
            rows.append(row)
        return RatMat(rows, cols=sum(p.cols for p in parts))

    def __getitem__(self, key) -> Fraction:
        i, j = key
        return self._rows[i][j]

    def row(self, i: int) -> RatVec:
        return RatVec(self._rows[i])

    def col(self, j: int) -> RatVec:
        return RatVec(r[j] for r in self._rows)

    def row_list(self) -> list[list[Fraction]]:
        """Mutable copy of the entries for elimination routines."""
        return [list(r) for r in self._rows]

    def transpose(self) -> "RatMat":
        return RatMat(
            ([r[j] for r in self._rows] for j in range(self.cols)), cols=self.rows
        )

    def matvec(self, v: RatVec) -> RatVec:
        if self.cols != len(v):
            raise DimMismatchError(f"matvec: {self.rows}x{self.cols} with dim {len(v)}")
        return RatVec(
            sum((a * b for a, b in zip(row, v)), _ZERO) for row in self._rows
        )

    def tmatvec(self, v: RatVec) -> RatVec:
        """Transpose-apply: returns M^T v."""
        if self.rows != len(v):
            raise DimMismatchError(
                f"tmatvec: {self.rows}x{self.cols} with dim {len(v)}"
            )
        out = [_ZERO] * self.cols
        for row, vi in zip(self._rows, v):
            if vi == 0:
                continue
            for j, a in enumerate(row):
                if a != 0:
                    out[j] = out[j] + vi * a
        return RatVec(out)

    def matmul(self, other: "RatMat") -> "RatMat":
        if self.cols != other.rows:
            raise DimMismatchError("matmul dims")
        ot = other.transpose()
        return RatMat(
            (
                [sum((a * b for a, b in zip(row, orow)), _ZERO) for orow in ot._rows]
                for row in self._rows
            ),
            cols=other.cols,
        )

    def __add__(self, other: "RatMat") -> "RatMat":
        if self.rows != other.rows or self.cols != other.cols:
            raise DimMismatchError("matrix add dims")
        return RatMat(
            ([a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self._rows, other._rows)),
            cols=self.cols,
        )

    def scale(self, k) -> "RatMat":
        k = rat(k)
        return RatMat(([k * a for a in row] for row in self._rows), cols=self.cols)

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "RatMat":
        return RatMat(
            ([self._rows[i][j] for j in col_idx] for i in row_idx), cols=len(col_idx)
        )

    def col_block(self, j0: int, j1: int) -> "RatMat":
        return RatMat(([r[j0:j1] for r in self._rows]), cols=j1 - j0)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_symmetric(self) -> bool:
        if not self.is_square():
            return False
        return all(
            self._rows[i][j] == self._rows[j][i]
            for i in range(self.rows)
            for j in range(i + 1, self.cols)
        )

    def is_zero(self) -> bool:
        return all(a == 0 for row in self._rows for a in row)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RatMat)
            and self.cols == other.cols
            and self._rows == other._rows
        )

    def __hash__(self) -> int:
        return hash((self._rows, self.cols))

    def __repr__(self) -> str:
        body = "; ".join(
            " ".join(format_rat(a) for a in row) for row in self._rows
        )
        return f"RatMat({self.rows}x{self.cols}: {body})"


def quad_form(M: RatMat, x: RatVec) -> Fraction:
    """x^T M x."""
    return x.dot(M.matvec(x))


@dataclass(frozen=True)
class PsdReport:
    """Outcome of the exact semidefiniteness test.

    When ``is_psd`` the ``pivots`` are the nonzero diagonal factors of the
    symmetric elimination; otherwise ``witness`` satisfies w^T M w < 0
    exactly.
    """

    is_psd: bool
    witness: RatVec | None
    pivots: tuple[Fraction, ...]


def ldl_psd_check(M: RatMat) -> PsdReport:
    """Decide M >= 0 exactly by symmetric pivoted elimination.

    Pivots are taken on positive diagonal entries; a negative diagonal or a
    zero diagonal with a nonzero residual row yields a negative-curvature
    witness, lifted back through the elimination steps.
    """
    if not M.is_square():
        raise NotSquareError(f"matrix is {M.rows}x{M.cols}")
    if not M.is_symmetric():
        raise NotSymmetricError("matrix is not symmetric")
    n = M.rows
    S = M.row_list()
    active = list(range(n))
    # each step: (pivot index, pivot value, pivot row restricted to then-active indices)
    steps: list[tuple[int, Fraction, dict[int, Fraction]]] = []
    pivots: list[Fraction] = []

    def lift(vcur: dict[int, Fraction]) -> RatVec:
        for p, d, prow in reversed(steps):
            s = sum((prow[j] * vj for j, vj in vcur.items() if j != p), _ZERO)
            vcur[p] = -s / d
        full = [_ZERO] * n
        for j, vj in vcur.items():
            full[j] = vj
        w = RatVec(full)
        if quad_form(M, w) >= 0:
            raise InternalInvariantError("lifted witness lost negative curvature")
        return w

    while active:
        neg = next((i for i in active if S[i][i] < 0), None)
        if neg is not None:
            return PsdReport(False, lift({neg: _ONE}), tuple(pivots))
        pos = next((i for i in active if S[i][i] > 0), None)
        if pos is None:
            # all remaining diagonals are zero: rows must vanish entirely
            for ai, i in enumerate(active):
                for j in active[ai + 1 :]:
                    if S[i][j] != 0:
                        t = -_ONE if S[i][j] > 0 else _ONE
                        return PsdReport(False, lift({i: _ONE, j: t}), tuple(pivots))
            return PsdReport(True, None, tuple(pivots))
        d = S[pos][pos]
        prow = {j: S[pos][j] for j in active}
        steps.append((pos, d, prow))
        pivots.append(d)
        active.remove(pos)
        for i in active:
            si = S[pos][i]
            if si == 0:
                continue
            for j in active:
                S[i][j] -= si * S[pos][j] / d
    return PsdReport(True, None, tuple(pivots))


UNIQUE = "unique"
UNDERDETERMINED = "underdetermined"
INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class LinearSolveReport:
    """Exact solution description for M x = v.

    ``x`` is a particular solution (free variables at zero) when the system
    is consistent; ``nullspace`` is a basis of ker(M), one vector per free
    column, so the full solution set is x + span(nullspace).
    """

    status: str
    x: RatVec | None
    rank: int
    nullspace: tuple[RatVec, ...]


def solve_linear(M: RatMat, v: RatVec) -> LinearSolveReport:
    """Solve M x = v by fraction-free (Bareiss) Gaussian elimination."""
    if M.rows != len(v):
        raise DimMismatchError(f"solve_linear: {M.rows} rows vs rhs dim {len(v)}")
    nr, nc = M.rows, M.cols
    aug = [list(M.row(i)) + [v[i]] for i in range(nr)]
    # scale rows to integers so the Bareiss updates stay division-exact
    for row in aug:
        den = 1
        for a in row:
            den = den * a.denominator // _gcd(den, a.denominator)
        if den != 1:
            for k in range(len(row)):
                row[k] = row[k] * den

    prev = _ONE
    pivot_cols: list[int] = []
    r = 0
    for c in range(nc):
        pr = next((i for i in range(r, nr) if aug[i][c] != 0), None)
        if pr is None:
            continue
        aug[r], aug[pr] = aug[pr], aug[r]
        piv = aug[r][c]
        for i in range(r + 1, nr):
            factor = aug[i][c]
            for j in range(c, nc + 1):
                aug[i][j] = (piv * aug[i][j] - factor * aug[r][j]) / prev
        prev = piv
        pivot_cols.append(c)
        r += 1
        if r == nr:
            break
    rank = r

    for i in range(rank, nr):
        if aug[i][nc] != 0:
            return LinearSolveReport(INCONSISTENT, None, rank, ())

    def back_substitute(rhs_col: list[Fraction], free_assign: dict[int, Fraction]):
        x = [_ZERO] * nc
        for j, val in free_assign.items():
            x[j] = val
        for i in range(rank - 1, -1, -1):
            c = pivot_cols[i]
            s = rhs_col[i]
            for j in range(c + 1, nc):
                if aug[i][j] != 0 and x[j] != 0:
                    s -= aug[i][j] * x[j]
            x[c] = s / aug[i][c]
        return x

    free_cols = [j for j in range(nc) if j not in pivot_cols]
    particular = RatVec(back_substitute([aug[i][nc] for i in range(rank)], {}))
    basis = []
    zero_rhs = [_ZERO] * rank
    for fc in free_cols:
        basis.append(RatVec(back_substitute(zero_rhs, {fc: _ONE})))
    status = UNIQUE if not free_cols else UNDERDETERMINED
    return LinearSolveReport(status, particular, rank, tuple(basis))


def independent_rows(M: RatMat) -> list[int]:
    """Indices of a row basis of M, chosen greedily in row order."""
    basis: list[tuple[list[Fraction], int]] = []  # (reduced row, pivot col)
    keep: list[int] = []
    for i in range(M.rows):
        row = list(M.row(i))
        for reduced, pc in basis:
            if row[pc] != 0:
                factor = row[pc] / reduced[pc]
                for j in range(len(row)):
                    row[j] -= factor * reduced[j]
        pc = next((j for j, a in enumerate(row) if a != 0), None)
        if pc is not None:
            basis.append((row, pc))
            keep.append(i)
    return keep


def nullspace_basis(M: RatMat) -> tuple[RatVec, ...]:
    """Basis of ker(M); the identity basis when M has no rows."""
    if M.rows == 0:
        return tuple(RatVec.unit(M.cols, j) for j in range(M.cols))
    return solve_linear(M, RatVec.zeros(M.rows)).nullspace


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a
